"""Tile lookup (R-tree) and per-tile nearest-neighbor search (k-d tree).

Labels are matched to the LiDAR tile whose footprint contains them through a
bulk-loaded R-tree. Each tile then gets a k-d tree over a seeded random half
of its points. Nearest-neighbor distances are planar (x, y only).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from .core import BBox, PointCloud
from .errors import EmptyCloud, EmptyManifest, FormatError, InvalidK, NoTileFound

DEFAULT_FRACTION = 0.5
NODE_CAPACITY = 16
LEAF_SIZE = 16


@dataclass(frozen=True)
class TileRecord:
    tile_id: str
    footprint: BBox
    path: str = ""


class TileIndex:
    """Sort-tile-recursive packed R-tree over tile footprints.

    ``levels[0]`` holds the records' boxes; every higher level stores node
    boxes plus the ``[start, end)`` range of children in the level below.
    """

    def __init__(self, records: Sequence[TileRecord], capacity: int = NODE_CAPACITY):
        if not records:
            raise EmptyManifest("tile manifest is empty")
        self.capacity = capacity
        boxes = np.array(
            [[r.footprint.min_x, r.footprint.min_y, r.footprint.max_x, r.footprint.max_y]
             for r in records], dtype=np.float64)
        order = self._str_order(boxes, capacity)
        self.records = [records[i] for i in order]
        boxes = boxes[order]
        self.levels = [(boxes, None)]
        while len(boxes) > 1:
            n = len(boxes)
            starts = np.arange(0, n, capacity)
            ends = np.minimum(starts + capacity, n)
            parent = np.array([
                [boxes[s:e, 0].min(), boxes[s:e, 1].min(), boxes[s:e, 2].max(), boxes[s:e, 3].max()]
                for s, e in zip(starts, ends)])
            ranges = np.stack([starts, ends], axis=1)
            # pack the parents too, carrying their child ranges along
            order = self._str_order(parent, capacity)
            boxes = parent[order]
            self.levels.append((boxes, ranges[order]))

    @staticmethod
    def _str_order(boxes: np.ndarray, capacity: int) -> np.ndarray:
        n = len(boxes)
        cx = (boxes[:, 0] + boxes[:, 2]) / 2
        cy = (boxes[:, 1] + boxes[:, 3]) / 2
        n_leaves = math.ceil(n / capacity)
        n_slices = max(1, math.ceil(math.sqrt(n_leaves)))
        per_slice = n_slices * capacity
        by_x = np.lexsort((cy, cx))
        parts = []
        for s in range(0, n, per_slice):
            sl = by_x[s:s + per_slice]
            parts.append(sl[np.lexsort((cx[sl], cy[sl]))])
        return np.concatenate(parts)

    def __len__(self) -> int:
        return len(self.records)

    def query(self, x: float, y: float) -> list[TileRecord]:
        """All records whose closed footprint contains (x, y)."""
        top = len(self.levels) - 1
        frontier = [(top, 0, len(self.levels[top][0]))]
        hits = []
        while frontier:
            level, start, end = frontier.pop()
            boxes, ranges = self.levels[level]
            b = boxes[start:end]
            inside = np.nonzero((b[:, 0] <= x) & (x <= b[:, 2]) & (b[:, 1] <= y) & (y <= b[:, 3]))[0]
            if level == 0:
                hits.extend(self.records[start + i] for i in inside)
            else:
                frontier.extend((level - 1, *ranges[start + i]) for i in inside)
        return hits


def build_tile_index(records: Sequence[TileRecord]) -> TileIndex:
    return TileIndex(list(records))


def locate_tile(index: TileIndex, p) -> TileRecord:
    """Containing tile of ``p``; shared edges go to the smallest ``tile_id``."""
    hits = index.query(float(p[0]), float(p[1]))
    if not hits:
        raise NoTileFound(p)
    return min(hits, key=lambda r: r.tile_id)


def load_manifest(path) -> list[TileRecord]:
    """Read a tile manifest: a JSON array of tile objects.

    Relative ``path`` entries resolve against the manifest's directory.
    """
    path = Path(path)
    try:
        entries = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if not isinstance(entries, list):
        raise FormatError(f"{path}: manifest must be a JSON array")
    records = []
    for e in entries:
        try:
            bbox = BBox(float(e["min_x"]), float(e["min_y"]), float(e["max_x"]), float(e["max_y"]))
            tile_path = Path(e["path"])
            tile_id = str(e["tile_id"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: bad tile entry {e!r}: {exc}") from exc
        if not tile_path.is_absolute():
            tile_path = path.parent / tile_path
        records.append(TileRecord(tile_id, bbox, str(tile_path)))
    return records


def write_manifest(path, records: Sequence[TileRecord]) -> None:
    entries = [
        {"tile_id": r.tile_id, "min_x": r.footprint.min_x, "min_y": r.footprint.min_y,
         "max_x": r.footprint.max_x, "max_y": r.footprint.max_y, "path": r.path}
        for r in records
    ]
    Path(path).write_text(json.dumps(entries, indent=1) + "\n")


def retained_count(n: int, fraction: float) -> int:
    """round(fraction * n), halves rounded up."""
    return int(math.floor(fraction * n + 0.5))


def subsample_indices(n: int, fraction: float, seed: int) -> np.ndarray:
    """Sorted original indices of a seeded uniform random subset.

    SplitMix64 drives a partial Fisher-Yates shuffle of ``range(n)``; the
    first ``round(fraction * n)`` slots are kept.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction {fraction} outside (0, 1]")
    m = retained_count(n, fraction)
    if m >= n:
        return np.arange(n, dtype=np.int64)
    picked = _kernels.partial_fisher_yates(n, m, np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    return np.sort(picked)


class KdTree:
    """Balanced 2D k-d tree over a subset of a cloud's points.

    Queries return *original* point indices, ordered by squared planar
    distance with ties broken by the smaller index.
    """

    def __init__(self, xy: np.ndarray, indices: np.ndarray, fraction: float = 1.0,
                 seed: int = 0, leafsize: int = LEAF_SIZE):
        xy = np.ascontiguousarray(xy, dtype=np.float64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.fraction = fraction
        self.seed = seed
        if len(self.indices) == 0:
            raise EmptyCloud("k-d tree needs at least one point")
        order, self._lo, self._hi, self._left, self._right, self._box = _kernels.build_tree(
            np.ascontiguousarray(xy[:, 0]), np.ascontiguousarray(xy[:, 1]), leafsize)
        self._sx = np.ascontiguousarray(xy[order, 0])
        self._sy = np.ascontiguousarray(xy[order, 1])
        self._sidx = np.ascontiguousarray(self.indices[order])

    def __len__(self) -> int:
        return len(self.indices)

    def query(self, queries, k: int):
        """Batch k-nearest search.

        Returns ``(indices, sq_dists, evaluations)`` with shapes ``(q, min(k, n))``
        and ``(q,)``; ``evaluations`` counts point-distance computations.
        """
        if k < 1:
            raise InvalidK(f"k must be positive, got {k}")
        qs = np.ascontiguousarray(np.asarray(queries, dtype=np.float64).reshape(-1, 2))
        return _kernels.knn_batch(self._sx, self._sy, self._sidx, self._lo, self._hi,
                                  self._left, self._right, self._box, qs, int(k))

    def nearest(self, queries) -> np.ndarray:
        idx, _, _ = self.query(queries, 1)
        return idx[:, 0]


def build_kdtree(cloud: PointCloud, fraction: float = DEFAULT_FRACTION, seed: int = 0) -> KdTree:
    if len(cloud) == 0:
        raise EmptyCloud("cannot index an empty cloud")
    keep = subsample_indices(len(cloud), fraction, seed)
    return KdTree(cloud.xy[keep], keep, fraction, seed)


def k_nearest(tree: KdTree, q, k: int) -> np.ndarray:
    """Original indices of the ``min(k, n)`` nearest retained points to ``q``."""
    idx, _, _ = tree.query(q, k)
    return idx[0]
