"""Segment extraction: bounding box, grid-guided subsampling, normalization."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BBox, PointCloud
from .errors import EmptyCloud, IntensityRange, InvalidGridSize, InvalidSide
from .spatial_index import KdTree

SEGMENT_SIDE = 200.0
GRID_SIZE = 80
MAX_INTENSITY = 255.0


@dataclass(frozen=True, eq=False)
class SamplingGrid:
    coords: np.ndarray  # (n*n, 2), row-major: row i varies y, column j varies x
    bbox: BBox
    n: int


def segment_bbox(center, side: float = SEGMENT_SIDE) -> BBox:
    if not side > 0:
        raise InvalidSide(f"side must be positive, got {side}")
    cx, cy = float(center[0]), float(center[1])
    h = side / 2
    return BBox(cx - h, cy - h, cx + h, cy + h)


def sampling_grid(bbox: BBox, n: int = GRID_SIZE) -> SamplingGrid:
    """n x n grid with both endpoints included on each axis."""
    if n < 2:
        raise InvalidGridSize(f"sampling grid needs n >= 2, got {n}")
    xs = np.linspace(bbox.min_x, bbox.max_x, n)
    ys = np.linspace(bbox.min_y, bbox.max_y, n)
    gx, gy = np.meshgrid(xs, ys)
    coords = np.stack([gx.ravel(), gy.ravel()], axis=1)
    coords.setflags(write=False)
    return SamplingGrid(coords, bbox, n)


def sample_cloud(tree: KdTree, source: PointCloud, grid: SamplingGrid) -> PointCloud:
    """Nearest source point for every grid coordinate, in grid order.

    Duplicates are kept where several grid nodes share a nearest point.
    """
    if len(tree) == 0 or len(source) == 0:
        raise EmptyCloud("cannot sample from an empty cloud")
    return source.take(tree.nearest(grid.coords))


def normalize_cloud(cloud: PointCloud, center, heading_deg: float) -> PointCloud:
    """Translate to ``center``, turn the travel direction north, zero the
    median height and scale intensity to [0, 1].

    ``heading_deg`` is measured clockwise from north, so the cloud is rotated
    counter-clockwise by that angle.
    """
    if len(cloud) == 0:
        raise EmptyCloud("cannot normalize an empty cloud")
    inten = cloud.intensity
    if np.any(~((inten >= 0.0) & (inten <= MAX_INTENSITY))):
        raise IntensityRange(f"intensity outside [0, {MAX_INTENSITY:g}]")
    x = cloud.xyz[:, 0] - float(center[0])
    y = cloud.xyz[:, 1] - float(center[1])
    theta = math.radians(heading_deg)
    c, s = math.cos(theta), math.sin(theta)
    xr = x * c - y * s
    yr = x * s + y * c
    z = cloud.xyz[:, 2] - np.median(cloud.xyz[:, 2])
    # already-scaled intensities stay put so re-normalizing is idempotent
    if not cloud.normalized:
        inten = inten / MAX_INTENSITY
    return PointCloud(np.stack([xr, yr, z], axis=1), inten, normalized=True)
