import numpy as np
import pytest

from rffs.core import PointCloud


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_cloud(rng, n, extent=100.0, zscale=5.0):
    xyz = np.column_stack([rng.uniform(-extent, extent, (n, 2)), rng.normal(0, zscale, n)])
    return PointCloud(xyz, rng.integers(0, 256, n).astype(float))


@pytest.fixture
def make_cloud(rng):
    return lambda n, **kw: random_cloud(rng, n, **kw)


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {text}")
