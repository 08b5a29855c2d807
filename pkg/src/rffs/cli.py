"""``rffs`` command line: synth, extract, train, eval, map, validate."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .core import validate_cloud
from .errors import FileError, RffsError
from .formats import TENSOR_MAGIC, TILE_MAGIC, read_labels, read_tensor, read_tile
from .spatial_index import build_tile_index, load_manifest
from .speed_head import TrainConfig
from .synth import KINDS

log = logging.getLogger("rffs")


def _ks(text: str) -> tuple[int, ...]:
    try:
        ks = tuple(sorted(int(v) for v in text.split(",") if v.strip()))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad group sizes {text!r}") from None
    if not ks or min(ks) < 1:
        raise argparse.ArgumentTypeError("group sizes must be positive integers")
    return ks


def _counts(text: str) -> dict:
    counts = {}
    for part in text.split(","):
        kind, _, n = part.partition("=")
        if kind not in KINDS or not n.isdigit():
            raise argparse.ArgumentTypeError(f"bad count {part!r}; use kind=N with kind in {KINDS}")
        counts[kind] = int(n)
    return counts


def cmd_synth(args) -> int:
    samples = pipeline.write_corpus(args.out, args.counts, args.seed)
    print(f"wrote {len(samples)} scenes to {args.out}")
    return 0


def cmd_extract(args) -> int:
    params = pipeline.ExtractParams(grid=args.grid, raster=args.raster, ks=args.ks, seed=args.seed)
    summary = pipeline.run_extract(args.manifest, args.labels, args.out_dir, params, args.workers)
    if args.figures:
        from .plotting import feature_map_grid
        from .raster_features import FeatureMap

        for e in summary["labels"]:
            if e["status"] == "ok":
                data = read_tensor(Path(args.out_dir) / e["tensor"])
                feature_map_grid(FeatureMap(data, args.ks), Path(args.out_dir) / f"{e['id']}.png")
    print(f"extracted {summary['total'] - summary['failed']}/{summary['total']} labels")
    for e in summary["labels"]:
        if e["status"] != "ok":
            print(f"  {e['id']}: {e['error']}", file=sys.stderr)
    return 1 if summary["failed"] else 0


def cmd_train(args) -> int:
    cfg = TrainConfig(lr=args.lr, epochs=args.epochs, seed=args.seed)
    model = pipeline.run_train(args.features_dir, args.labels, args.model_out, cfg)
    print(f"final loss {model.losses[-1]:.6f}")
    return 0


def _write_rows(path, preds) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "x", "y", "true_mph", "pred_mph", "abs_err", "within5"])
        for s, t, p, e in zip(preds.samples, preds.true_mph, preds.pred_mph, preds.abs_err):
            w.writerow([s.id, repr(s.center[0]), repr(s.center[1]), repr(float(t)),
                        repr(float(p)), repr(float(e)), int(e <= 5.0)])


def cmd_eval(args) -> int:
    report, preds = pipeline.run_eval(args.model, args.features_dir, args.labels)
    text = json.dumps(report.to_json(), indent=1, sort_keys=True)
    print(text)
    if args.report_dir:
        from .plotting import prediction_scatter

        out = Path(args.report_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(text + "\n")
        _write_rows(out / "predictions.csv", preds)
        prediction_scatter(preds.true_mph, preds.pred_mph, out / "predictions.png")
    return 0


def cmd_map(args) -> int:
    preds = pipeline.run_predict(args.model, args.features_dir, args.labels)
    geo = pipeline.speed_map_geojson(preds)
    try:
        Path(args.out).write_text(json.dumps(geo, indent=1) + "\n")
    except OSError as exc:
        raise FileError(f"cannot write {args.out}: {exc}") from exc
    if args.figure:
        from .plotting import speed_map

        speed_map([s.center for s in preds.samples], preds.true_mph, preds.pred_mph, args.figure)
    print(f"wrote {len(geo['features'])} points to {args.out}")
    return 0


def _validate_one(path: Path) -> str | None:
    """Problem description for ``path``, or None when it is well formed."""
    head = path.read_bytes()[:4]
    if head == TILE_MAGIC:
        v = validate_cloud(read_tile(path))
        return None if v is None else f"point {v.index}: {v.message}"
    if head == TENSOR_MAGIC:
        read_tensor(path)
        return None
    if path.suffix == ".jsonl":
        read_labels(path)
        return None
    if path.suffix == ".json":
        build_tile_index(load_manifest(path))
        return None
    return "unrecognized file type"


def cmd_validate(args) -> int:
    bad = 0
    for name in args.paths:
        path = Path(name)
        try:
            problem = _validate_one(path)
        except (RffsError, OSError) as exc:
            problem = f"{type(exc).__name__}: {exc}"
        if problem:
            bad += 1
            print(f"{path}: {problem}")
        else:
            print(f"{path}: ok")
    return 1 if bad else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rffs", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate synthetic scenes, manifest and labels")
    s.add_argument("out")
    s.add_argument("--counts", type=_counts, default={k: 20 for k in KINDS},
                   help="scenes per kind, e.g. highway=20,rural=20,urban=20")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("extract", help="30x7x7 structural feature maps per label")
    s.add_argument("manifest")
    s.add_argument("labels")
    s.add_argument("out_dir")
    s.add_argument("--grid", type=int, default=80)
    s.add_argument("--raster", type=int, default=7)
    s.add_argument("--ks", type=_ks, default=(16, 32, 128))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=None,
                   help="worker threads (capped by RFFS_THREADS)")
    s.add_argument("--figures", action="store_true", help="also render each feature map as PNG")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("train", help="fit the logistic baseline on pooled features")
    s.add_argument("features_dir")
    s.add_argument("labels")
    s.add_argument("model_out")
    s.add_argument("--lr", type=float, default=TrainConfig.lr)
    s.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="within-5mph evaluation, JSON report on stdout")
    s.add_argument("model")
    s.add_argument("features_dir")
    s.add_argument("labels")
    s.add_argument("--report-dir", help="also write report.json, predictions.csv and a figure")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("map", help="GeoJSON speed map of predictions")
    s.add_argument("model")
    s.add_argument("features_dir")
    s.add_argument("labels")
    s.add_argument("out")
    s.add_argument("--figure", help="also render the speed map to this image file")
    s.set_defaults(func=cmd_map)

    s = sub.add_parser("validate", help="check tiles, tensors, labels or manifests")
    s.add_argument("paths", nargs="+")
    s.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except RffsError as exc:
        print(f"rffs {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
