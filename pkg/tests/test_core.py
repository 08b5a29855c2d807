import numpy as np
import pytest

from rffs.core import (BBox, Point3, PointCloud, SpeedSample, Violation, clamp_eigenvalues,
                       validate_cloud)
from rffs.errors import InvalidSpeed, NumericalError


def test_valid_cloud_is_ok():
    cloud = PointCloud.from_points([(0, 0, 0, 10), (1, 2, 3, 20), (4, 5, 6, 255)])
    assert validate_cloud(cloud) is None


def test_nan_z_reported_with_index():
    cloud = PointCloud.from_points([(0, 0, 0, 1), (1, 1, np.nan, 1), (2, 2, 2, 1)])
    assert validate_cloud(cloud) == Violation(1, "non-finite z")


def test_normalized_intensity_out_of_range():
    cloud = PointCloud.from_points([(0, 0, 0, 0.5), (1, 1, 0, 2.0), (1, 1, 0, 0.1)],
                                   normalized=True)
    v = validate_cloud(cloud)
    assert v.index == 1 and v.message == "intensity out of [0,1]"


def test_normalized_median_must_be_zero():
    cloud = PointCloud.from_points([(0, 0, 1, 0.5), (1, 1, 2, 0.5)], normalized=True)
    assert validate_cloud(cloud).message == "median z not 0"


def test_cloud_is_immutable():
    cloud = PointCloud.from_points([(0, 0, 0, 1)])
    with pytest.raises(ValueError):
        cloud.xyz[0, 0] = 5.0


def test_point_access():
    cloud = PointCloud.from_points([(1, 2, 3, 4)])
    assert cloud[0] == Point3(1.0, 2.0, 3.0, 4.0)
    assert list(cloud) == [Point3(1.0, 2.0, 3.0, 4.0)]


@pytest.mark.parametrize("box", [(0, 0, 0, 1), (0, 0, 1, -1)])
def test_bbox_rejects_degenerate(box):
    with pytest.raises(ValueError):
        BBox(*box)


def test_speed_sample_derives_bin():
    s = SpeedSample("a", (1, 2), 90.0, 45.4)
    assert s.class_bin == 44
    with pytest.raises(ValueError):
        SpeedSample("a", (1, 2), 90.0, 45.4, class_bin=3)
    with pytest.raises(InvalidSpeed):
        SpeedSample("a", (1, 2), 90.0, 0.0)
    with pytest.raises(ValueError):
        SpeedSample("a", (1, 2), 360.0, 30.0)


def test_clamp_eigenvalues():
    np.testing.assert_array_equal(clamp_eigenvalues([2.0, 0.0, -5e-10]), [2.0, 0.0, 0.0])
    with pytest.raises(NumericalError):
        clamp_eigenvalues([1.0, -1e-6])
