"""Raster-center aligned structural statistics.

A ``h x w`` grid of raster centers is inscribed in the segment box. Around
each center, the ``k`` planar-nearest points are grouped for every scale in
``ks`` and reduced to ten eigenvalue/height statistics. Stacking them gives a
``(10 * len(ks), h, w)`` feature map whose cells line up with an image
encoder's feature grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .core import BBox, EigenPair2D, EigenTriple, PointCloud, clamp_eigenvalues
from .errors import EmptyCloud, IncompleteStats, InvalidGridSize, InvalidK, ShapeMismatch
from .spatial_index import KdTree

RASTER_SIZE = 7
GROUP_SIZES = (16, 32, 128)
DENSITY_FLOOR = 1e-12

FEATURE_NAMES = ("C", "O", "L", "A", "D", "S2D", "L2D", "V", "dZ", "var_z")
N_FEATURES = len(FEATURE_NAMES)


class StructuralFeatureVector(NamedTuple):
    """Ten statistics of one neighborhood, in feature-map channel order.

    C: change of curvature, O: omnivariance, L: linearity, A: eigenentropy,
    D: local point density, S2D/L2D: 2D scattering and linearity,
    V: verticality, dZ: max height difference, var_z: height variance.
    """

    C: float
    O: float
    L: float
    A: float
    D: float
    S2D: float
    L2D: float
    V: float
    dZ: float
    var_z: float


@dataclass(frozen=True, eq=False)
class RasterGrid:
    centers: np.ndarray  # (h*w, 2) row-major
    bbox: BBox
    h: int
    w: int

    def center(self, i: int, j: int) -> tuple[float, float]:
        x, y = self.centers[i * self.w + j]
        return float(x), float(y)


@dataclass(frozen=True, eq=False)
class NeighborhoodGroup:
    center_index: tuple[int, int]
    k: int
    points: PointCloud
    indices: np.ndarray  # source indices, nearest first, padded cyclically


@dataclass(frozen=True, eq=False)
class FeatureMap:
    data: np.ndarray  # (10 * len(ks), h, w)
    ks: tuple[int, ...] = GROUP_SIZES

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def channel(self, feature: str, k: int) -> np.ndarray:
        return self.data[N_FEATURES * self.ks.index(k) + FEATURE_NAMES.index(feature)]


def raster_centers(bbox: BBox, h: int = RASTER_SIZE, w: int = RASTER_SIZE) -> RasterGrid:
    """Cell centers of an ``h x w`` partition of ``bbox``."""
    if h < 1 or w < 1:
        raise InvalidGridSize(f"raster grid must be at least 1x1, got {h}x{w}")
    xs = bbox.min_x + (np.arange(w) + 0.5) * (bbox.width / w)
    ys = bbox.min_y + (np.arange(h) + 0.5) * (bbox.height / h)
    gx, gy = np.meshgrid(xs, ys)
    centers = np.stack([gx.ravel(), gy.ravel()], axis=1)
    centers.setflags(write=False)
    return RasterGrid(centers, bbox, h, w)


def _pad_cyclic(nearest: np.ndarray, k: int) -> np.ndarray:
    if len(nearest) >= k:
        return nearest[:k]
    return np.resize(nearest, k)


def _cloud_tree(cloud: PointCloud) -> KdTree:
    if len(cloud) == 0:
        raise EmptyCloud("cannot group an empty cloud")
    return KdTree(cloud.xy, np.arange(len(cloud)))


def group_neighborhood(cloud: PointCloud, center, k: int, center_index=(0, 0),
                       tree: KdTree | None = None) -> NeighborhoodGroup:
    """The ``k`` planar-nearest points to ``center`` (ties by input index).

    Clouds with fewer than ``k`` points repeat their nearest-first ordering
    cyclically until ``k`` points are collected.
    """
    if k < 1:
        raise InvalidK(f"group size must be positive, got {k}")
    tree = tree if tree is not None else _cloud_tree(cloud)
    idx = _pad_cyclic(tree.query(center, k)[0][0], k)
    return NeighborhoodGroup(tuple(center_index), k, cloud.take(idx), idx)


def multi_scale_group(cloud: PointCloud, grid: RasterGrid,
                      ks: Sequence[int] = GROUP_SIZES) -> list[NeighborhoodGroup]:
    """One group per (center, k): centers row-major, then ascending ``k``.

    The k-nearest ordering is a strict total order, so smaller scales are
    prefixes of the largest query.
    """
    ks = sorted(ks)
    tree = _cloud_tree(cloud)
    nearest, _, _ = tree.query(grid.centers, max(ks))
    groups = []
    for c, row in enumerate(nearest):
        ij = divmod(c, grid.w)
        for k in ks:
            idx = _pad_cyclic(row, k)
            groups.append(NeighborhoodGroup(ij, k, cloud.take(idx), idx))
    return groups


def _as_xyz(points) -> np.ndarray:
    if isinstance(points, PointCloud):
        return points.xyz
    if isinstance(points, NeighborhoodGroup):
        return points.points.xyz
    a = np.asarray(points, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] < 3:
        raise ShapeMismatch(f"expected (n, 3) points, got {a.shape}")
    return a[:, :3]


def _covariances(xyz: np.ndarray) -> np.ndarray:
    """Population covariance of each group in a ``(g, n, d)`` stack."""
    centered = xyz - xyz.mean(axis=1, keepdims=True)
    return np.einsum("gni,gnj->gij", centered, centered) / xyz.shape[1]


def _fix_sign(v: np.ndarray) -> np.ndarray:
    """Orient vectors so z >= 0, or the first nonzero component > 0 if z == 0."""
    ref = v[:, 2].copy()
    flat = ref == 0.0
    if flat.any():
        nz = v[flat] != 0.0
        first = np.argmax(nz, axis=1)
        ref[flat] = v[flat][np.arange(nz.shape[0]), first]
    return np.where(ref[:, None] < 0.0, -v, v)


def _eigen3(xyz: np.ndarray):
    """Descending clamped eigenvalues ``(g, 3)`` and oriented ``v3`` ``(g, 3)``."""
    vals, vecs = np.linalg.eigh(_covariances(xyz))
    vals = clamp_eigenvalues(vals[:, ::-1])
    return vals, _fix_sign(vecs[:, :, 0])


def _eigen2(xyz: np.ndarray) -> np.ndarray:
    vals = np.linalg.eigvalsh(_covariances(xyz[:, :, :2]))
    return clamp_eigenvalues(vals[:, ::-1])


def covariance_eigen(points) -> EigenTriple:
    xyz = _as_xyz(points)
    if len(xyz) == 0:
        raise EmptyCloud("covariance of an empty point set")
    vals, v3 = _eigen3(xyz[None])
    l1, l2, l3 = (float(v) for v in vals[0])
    return EigenTriple(l1, l2, l3, tuple(float(c) for c in v3[0]))


def eigen2d(points) -> EigenPair2D:
    xyz = _as_xyz(points)
    if len(xyz) == 0:
        raise EmptyCloud("covariance of an empty point set")
    l1, l2 = _eigen2(xyz[None])[0]
    return EigenPair2D(float(l1), float(l2))


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0.0)
    return out


def structural_stats_batch(xyz: np.ndarray) -> np.ndarray:
    """Statistics for a ``(g, k, 3)`` stack of equally sized groups -> ``(g, 10)``."""
    xyz = np.asarray(xyz, dtype=np.float64)
    if xyz.ndim != 3 or xyz.shape[2] != 3:
        raise ShapeMismatch(f"expected (g, k, 3) groups, got {xyz.shape}")
    k = xyz.shape[1]
    lam, v3 = _eigen3(xyz)
    lam2 = _eigen2(xyz)
    l1, l2, l3 = lam.T
    total = lam.sum(axis=1)
    prod = l1 * l2 * l3
    with np.errstate(divide="ignore", invalid="ignore"):
        lnl = np.where(lam > 0.0, lam * np.log(np.where(lam > 0.0, lam, 1.0)), 0.0)
    z = xyz[:, :, 2]
    out = np.empty((xyz.shape[0], N_FEATURES))
    # rounding can nudge the ratio bounds by an ulp
    out[:, 0] = np.minimum(_safe_ratio(l3, total), 1.0 / 3.0)
    out[:, 1] = _safe_ratio(np.cbrt(prod), total)
    out[:, 2] = _safe_ratio(l1 - l2, l1)
    out[:, 3] = -lnl.sum(axis=1)
    out[:, 4] = k / ((4.0 / 3.0) * np.maximum(prod, DENSITY_FLOOR))
    out[:, 5] = lam2.sum(axis=1)
    out[:, 6] = _safe_ratio(lam2[:, 1], lam2[:, 0])
    out[:, 7] = np.minimum(np.abs(v3[:, 2]), 1.0)
    out[:, 8] = z.max(axis=1) - z.min(axis=1)
    out[:, 9] = z.var(axis=1)
    return out


def structural_stats(group) -> StructuralFeatureVector:
    xyz = _as_xyz(group)
    if len(xyz) == 0:
        raise EmptyCloud("statistics of an empty group")
    return StructuralFeatureVector(*(float(v) for v in structural_stats_batch(xyz[None])[0]))


def assemble_feature_map(stats: Mapping[tuple[int, int, int], Sequence[float]],
                         h: int = RASTER_SIZE, w: int = RASTER_SIZE,
                         ks: Sequence[int] = GROUP_SIZES) -> FeatureMap:
    """Tile per-(i, j, k) statistics into a scale-major feature map.

    Channel ``10 * s + f`` holds feature ``f`` of the ``s``-th group size.
    """
    ks = tuple(sorted(ks))
    data = np.empty((N_FEATURES * len(ks), h, w))
    for s, k in enumerate(ks):
        for i in range(h):
            for j in range(w):
                try:
                    vec = stats[(i, j, k)]
                except KeyError:
                    raise IncompleteStats(f"no statistics for center ({i}, {j}) at k={k}") from None
                data[N_FEATURES * s:N_FEATURES * (s + 1), i, j] = vec
    return FeatureMap(data, ks)


def feature_map_from_cloud(cloud: PointCloud, grid: RasterGrid,
                           ks: Sequence[int] = GROUP_SIZES) -> FeatureMap:
    """Grouping, statistics and assembly for a whole segment in one pass."""
    ks = tuple(sorted(ks))
    tree = _cloud_tree(cloud)
    nearest, _, _ = tree.query(grid.centers, max(ks))
    data = np.empty((N_FEATURES * len(ks), grid.h, grid.w))
    for s, k in enumerate(ks):
        idx = np.stack([_pad_cyclic(row, k) for row in nearest])
        stats = structural_stats_batch(cloud.xyz[idx])
        data[N_FEATURES * s:N_FEATURES * (s + 1)] = stats.T.reshape(N_FEATURES, grid.h, grid.w)
    return FeatureMap(data, ks)


def pooled_features(fmap: FeatureMap) -> np.ndarray:
    """Per-channel mean over the raster cells."""
    return fmap.data.mean(axis=(1, 2))
