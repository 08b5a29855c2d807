"""End-to-end orchestration behind the ``rffs`` command line."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import SpeedSample
from .errors import EmptyDataset, MissingFeature, RffsError
from .formats import read_labels, read_tensor, read_tile, write_labels, write_tensor, write_tile
from .raster_features import (GROUP_SIZES, RASTER_SIZE, FeatureMap, feature_map_from_cloud,
                              pooled_features, raster_centers)
from .segment_sampler import (GRID_SIZE, SEGMENT_SIDE, normalize_cloud, sample_cloud,
                              sampling_grid, segment_bbox)
from .spatial_index import (DEFAULT_FRACTION, TileRecord, build_kdtree, build_tile_index,
                            load_manifest, locate_tile, write_manifest)
from .speed_head import (LogisticModel, TrainConfig, bin_center, evaluate, predict_many,
                         train_logistic)
from .synth import KINDS, synth_scene

log = logging.getLogger(__name__)

TENSOR_SUFFIX = ".fts"
SIDECAR_SUFFIX = ".json"
EXTRACT_MANIFEST = "extract_manifest.json"
SCENE_SPACING = 1000.0
CORPUS_COLUMNS = 10
_SAFE_ID = re.compile(r"^[A-Za-z0-9._-]+$")


@dataclass(frozen=True)
class ExtractParams:
    grid: int = GRID_SIZE
    raster: int = RASTER_SIZE
    ks: tuple[int, ...] = GROUP_SIZES
    side: float = SEGMENT_SIDE
    fraction: float = DEFAULT_FRACTION
    seed: int = 0


def label_seed(seed: int, label_id: str) -> int:
    """Per-label seed: the run seed XOR a stable 64-bit hash of the id."""
    digest = hashlib.blake2b(label_id.encode("utf-8"), digest_size=8).digest()
    return (seed ^ int.from_bytes(digest, "little")) & 0xFFFFFFFFFFFFFFFF


def worker_count(requested: int | None = None) -> int:
    cap = os.environ.get("RFFS_THREADS")
    n = requested or (int(cap) if cap else 1)
    if cap:
        n = min(n, int(cap))
    return max(1, n)


def extract_segment(record: TileRecord, sample: SpeedSample, params: ExtractParams) -> FeatureMap:
    """Feature map for one label located in ``record``."""
    cloud = read_tile(record.path)
    tree = build_kdtree(cloud, params.fraction, label_seed(params.seed, sample.id))
    grid = sampling_grid(segment_bbox(sample.center, params.side), params.grid)
    segment = normalize_cloud(sample_cloud(tree, cloud, grid), sample.center, sample.heading_deg)
    raster = raster_centers(segment_bbox((0.0, 0.0), params.side), params.raster, params.raster)
    return feature_map_from_cloud(segment, raster, params.ks)


def _extract_one(index, sample: SpeedSample, out_dir: Path, params: ExtractParams) -> dict:
    entry = {"id": sample.id}
    try:
        if not _SAFE_ID.match(sample.id):
            raise RffsError(f"label id {sample.id!r} is not usable as a file name")
        record = locate_tile(index, sample.center)
        fmap = extract_segment(record, sample, params)
        tensor = sample.id + TENSOR_SUFFIX
        write_tensor(out_dir / tensor, fmap.data)
        sidecar = {
            "id": sample.id,
            "class_bin": sample.class_bin,
            "speed_mph": sample.speed_mph,
            "tile_id": record.tile_id,
            "tensor": tensor,
            "shape": list(fmap.shape),
            "seed": label_seed(params.seed, sample.id),
            "params": {"grid": params.grid, "raster": params.raster, "ks": list(params.ks),
                       "side": params.side, "fraction": params.fraction, "seed": params.seed},
        }
        (out_dir / (sample.id + SIDECAR_SUFFIX)).write_text(
            json.dumps(sidecar, indent=1, sort_keys=True) + "\n")
        entry.update(status="ok", tensor=tensor)
    except (RffsError, OSError) as exc:
        log.error("label %s failed: %s", sample.id, exc)
        entry.update(status="error", error=f"{type(exc).__name__}: {exc}")
    return entry


def run_extract(manifest, labels, out_dir, params: ExtractParams = ExtractParams(),
                workers: int | None = None) -> dict:
    """Extract every label, collecting per-label failures instead of stopping.

    Writes one tensor plus sidecar per successful label and a summary
    manifest; returns that summary.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    index = build_tile_index(load_manifest(manifest))
    samples = read_labels(labels)
    n = worker_count(workers)
    if n == 1:
        entries = [_extract_one(index, s, out_dir, params) for s in samples]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            entries = list(pool.map(lambda s: _extract_one(index, s, out_dir, params), samples))
    failed = sum(e["status"] != "ok" for e in entries)
    summary = {"labels": entries, "failed": failed, "total": len(entries)}
    (out_dir / EXTRACT_MANIFEST).write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    return summary


def load_pooled(features_dir, samples: Sequence[SpeedSample], skip_missing: bool = False):
    """Pooled 30-vectors for ``samples``; returns (features, kept samples)."""
    features_dir = Path(features_dir)
    rows, kept = [], []
    for s in samples:
        path = features_dir / (s.id + TENSOR_SUFFIX)
        if not path.exists():
            if skip_missing:
                log.warning("no features for %s; skipped", s.id)
                continue
            raise MissingFeature(f"missing feature tensor {path}")
        data = read_tensor(path).astype(np.float64)
        rows.append(pooled_features(FeatureMap(data)))
        kept.append(s)
    if not rows:
        raise EmptyDataset(f"no feature tensors for the given labels in {features_dir}")
    return np.stack(rows), kept


def run_train(features_dir, labels, model_out, cfg: TrainConfig) -> LogisticModel:
    x, kept = load_pooled(features_dir, read_labels(labels), skip_missing=True)
    model = train_logistic(x, [s.class_bin for s in kept], cfg)
    model.save(model_out)
    return model


@dataclass
class Predictions:
    samples: list
    pred_mph: np.ndarray
    true_mph: np.ndarray
    logits: np.ndarray = field(repr=False)

    @property
    def abs_err(self) -> np.ndarray:
        return np.abs(self.pred_mph - self.true_mph)


def run_predict(model_path, features_dir, labels) -> Predictions:
    samples = read_labels(labels)
    if not samples:
        raise EmptyDataset(f"{labels} holds no labels")
    model = LogisticModel.load(model_path)
    x, kept = load_pooled(features_dir, samples)
    logits = model.logits(x)
    pred = np.array([bin_center(int(c)) for c in predict_many(model, x)])
    true = np.array([s.speed_mph for s in kept])
    return Predictions(kept, pred, true, logits)


def run_eval(model_path, features_dir, labels):
    preds = run_predict(model_path, features_dir, labels)
    return evaluate(preds.pred_mph, preds.true_mph, preds.logits), preds


def speed_map_geojson(preds: Predictions) -> dict:
    features = []
    for s, p, t in zip(preds.samples, preds.pred_mph, preds.true_mph):
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [s.center[0], s.center[1]]},
            "properties": {"id": s.id, "true_mph": float(t), "pred_mph": float(p),
                           "abs_err": float(abs(p - t))},
        })
    return {"type": "FeatureCollection", "features": features}


def write_corpus(out_dir, counts: dict, seed: int, spacing: float = SCENE_SPACING) -> list:
    """Synthesize scenes on a grid of disjoint tiles, ten per row.

    Writes ``tiles/<id>.pct``, ``manifest.json`` and ``labels.jsonl``; scene
    ``i`` of the run uses seed ``seed + i``.
    """
    out_dir = Path(out_dir)
    (out_dir / "tiles").mkdir(parents=True, exist_ok=True)
    records, samples = [], []
    i = 0
    for kind in KINDS:
        for _ in range(counts.get(kind, 0)):
            origin = ((i % CORPUS_COLUMNS) * spacing, (i // CORPUS_COLUMNS) * spacing)
            cloud, sample = synth_scene(kind, seed + i, origin)
            rel = f"tiles/{sample.id}.pct"
            write_tile(out_dir / rel, cloud)
            fp = segment_bbox(origin, SEGMENT_SIDE)
            records.append(TileRecord(sample.id, fp, rel))
            samples.append(sample)
            i += 1
    write_manifest(out_dir / "manifest.json", records)
    write_labels(out_dir / "labels.jsonl", samples)
    return samples
