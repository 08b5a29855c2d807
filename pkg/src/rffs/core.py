"""Domain types: points, clouds, boxes, speed labels and eigen results.

Coordinates are planar meters in a projected CRS; no geodesy happens here.
All types are immutable once built, so they can be shared between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import NumericalError

EIGEN_CLAMP = 1e-9
MEDIAN_TOL = 1e-9


class Point3(NamedTuple):
    x: float
    y: float
    z: float
    intensity: float


@dataclass(frozen=True)
class BBox:
    min_x: float
    min_y: float
    max_x: float
    max_y: float

    def __post_init__(self):
        if not (self.max_x > self.min_x and self.max_y > self.min_y):
            raise ValueError(f"degenerate bbox {self}")

    @property
    def width(self) -> float:
        return self.max_x - self.min_x

    @property
    def height(self) -> float:
        return self.max_y - self.min_y

    @property
    def center(self) -> tuple[float, float]:
        return ((self.min_x + self.max_x) / 2, (self.min_y + self.max_y) / 2)

    def contains(self, x: float, y: float) -> bool:
        """Closed containment: points on the boundary count as inside."""
        return self.min_x <= x <= self.max_x and self.min_y <= y <= self.max_y


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Ordered points stored column-wise.

    ``xyz`` is an ``(n, 3)`` float64 array and ``intensity`` an ``(n,)``
    float64 array. Construction does not validate finiteness; use
    :func:`validate_cloud` for that, so malformed input can still be reported.
    """

    xyz: np.ndarray
    intensity: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        xyz = np.array(self.xyz, dtype=np.float64).reshape(-1, 3)
        intensity = np.array(self.intensity, dtype=np.float64).reshape(-1)
        if intensity.shape[0] != xyz.shape[0]:
            raise ValueError(
                f"{xyz.shape[0]} coordinates but {intensity.shape[0]} intensities"
            )
        object.__setattr__(self, "xyz", _frozen(xyz))
        object.__setattr__(self, "intensity", _frozen(intensity))

    @classmethod
    def from_points(cls, points: Iterable[Sequence[float]], normalized: bool = False):
        rows = np.array([tuple(p) for p in points], dtype=np.float64).reshape(-1, 4)
        return cls(rows[:, :3], rows[:, 3], normalized)

    @classmethod
    def empty(cls) -> "PointCloud":
        return cls(np.empty((0, 3)), np.empty(0))

    def __len__(self) -> int:
        return self.xyz.shape[0]

    def __getitem__(self, i: int) -> Point3:
        x, y, z = self.xyz[i]
        return Point3(float(x), float(y), float(z), float(self.intensity[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def take(self, indices) -> "PointCloud":
        """New cloud of the points at ``indices`` (duplicates allowed)."""
        idx = np.asarray(indices, dtype=np.int64)
        return PointCloud(self.xyz[idx], self.intensity[idx], self.normalized)

    @property
    def xy(self) -> np.ndarray:
        return self.xyz[:, :2]


@dataclass(frozen=True)
class SpeedSample:
    id: str
    center: tuple[float, float]
    heading_deg: float
    speed_mph: float
    class_bin: Optional[int] = field(default=None)

    def __post_init__(self):
        from .speed_head import bin_speed

        if not 0.0 <= self.heading_deg < 360.0:
            raise ValueError(f"heading {self.heading_deg} outside [0, 360)")
        expected = bin_speed(self.speed_mph)
        if self.class_bin is None:
            object.__setattr__(self, "class_bin", expected)
        elif self.class_bin != expected:
            raise ValueError(
                f"class_bin {self.class_bin} inconsistent with {self.speed_mph} mph"
            )
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))


class EigenTriple(NamedTuple):
    l1: float
    l2: float
    l3: float
    v3: tuple[float, float, float]


class EigenPair2D(NamedTuple):
    l1_2d: float
    l2_2d: float


class Violation(NamedTuple):
    index: Optional[int]
    message: str


def clamp_eigenvalues(values: np.ndarray) -> np.ndarray:
    """Zero eigenvalues in ``[-1e-9, 0)``; anything more negative is a bug."""
    values = np.asarray(values, dtype=np.float64)
    if np.any(values < -EIGEN_CLAMP):
        raise NumericalError(f"covariance eigenvalue {values.min()!r} below -{EIGEN_CLAMP}")
    return np.where(values < 0.0, 0.0, values)


def validate_cloud(cloud: PointCloud) -> Optional[Violation]:
    """Return the first violated invariant, or ``None`` when the cloud is ok."""
    names = ("x", "y", "z")
    bad = ~np.isfinite(cloud.xyz)
    if bad.any():
        i, c = np.argwhere(bad)[0]
        return Violation(int(i), f"non-finite {names[c]}")
    bad = ~np.isfinite(cloud.intensity)
    if bad.any():
        return Violation(int(np.argmax(bad)), "non-finite intensity")
    if cloud.normalized:
        bad = (cloud.intensity < 0.0) | (cloud.intensity > 1.0)
        if bad.any():
            return Violation(int(np.argmax(bad)), "intensity out of [0,1]")
        if len(cloud) and abs(float(np.median(cloud.xyz[:, 2]))) > MEDIAN_TOL:
            return Violation(None, "median z not 0")
    return None
