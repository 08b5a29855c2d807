"""On-disk formats: point tiles, feature tensors and speed labels.

Tile file (little-endian)::

    b"PCT1" | version u16 = 1 | reserved u16 = 0 | count u64
    count x (x f64, y f64, z f64, intensity f32, 4 zero bytes)

Tensor file (little-endian)::

    b"FTS1" | version u16 = 1 | ndim u16 | dims u32 x ndim | f32 payload (row-major)

Label file: JSON lines with ``id``, ``x``, ``y``, ``heading_deg``, ``speed_mph``.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import PointCloud, SpeedSample
from .errors import FileError, FormatError, TruncatedFile

TILE_MAGIC = b"PCT1"
TENSOR_MAGIC = b"FTS1"
VERSION = 1

_TILE_HEADER = struct.Struct("<4sHHQ")
TILE_RECORD = np.dtype([("x", "<f8"), ("y", "<f8"), ("z", "<f8"),
                        ("intensity", "<f4"), ("pad", "V4")])
_TENSOR_HEADER = struct.Struct("<4sHH")

assert _TILE_HEADER.size == 16 and TILE_RECORD.itemsize == 32


def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise FileError(f"cannot read {path}: {exc}") from exc


def _write_bytes(path, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise FileError(f"cannot write {path}: {exc}") from exc


def encode_tile(cloud: PointCloud) -> bytes:
    rec = np.zeros(len(cloud), dtype=TILE_RECORD)
    rec["x"], rec["y"], rec["z"] = cloud.xyz.T
    rec["intensity"] = cloud.intensity
    return _TILE_HEADER.pack(TILE_MAGIC, VERSION, 0, len(cloud)) + rec.tobytes()


def decode_tile(data: bytes) -> PointCloud:
    if len(data) < _TILE_HEADER.size:
        raise TruncatedFile(f"tile header needs 16 bytes, got {len(data)}")
    magic, version, reserved, count = _TILE_HEADER.unpack_from(data)
    if magic != TILE_MAGIC:
        raise FormatError(f"bad tile magic {magic!r}")
    if version != VERSION or reserved != 0:
        raise FormatError(f"unsupported tile version {version} (reserved={reserved})")
    body = len(data) - _TILE_HEADER.size
    if body < count * TILE_RECORD.itemsize:
        raise TruncatedFile(f"tile declares {count} points but holds {body} payload bytes")
    if body > count * TILE_RECORD.itemsize:
        raise FormatError(f"{body - count * TILE_RECORD.itemsize} trailing bytes after tile payload")
    rec = np.frombuffer(data, dtype=TILE_RECORD, count=count, offset=_TILE_HEADER.size)
    xyz = np.stack([rec["x"], rec["y"], rec["z"]], axis=1)
    return PointCloud(xyz, rec["intensity"].astype(np.float64))


def write_tile(path, cloud: PointCloud) -> None:
    _write_bytes(path, encode_tile(cloud))


def read_tile(path) -> PointCloud:
    return decode_tile(_read_bytes(path))


def encode_tensor(array: np.ndarray) -> bytes:
    a = np.ascontiguousarray(array, dtype="<f4")
    header = _TENSOR_HEADER.pack(TENSOR_MAGIC, VERSION, a.ndim)
    return header + struct.pack(f"<{a.ndim}I", *a.shape) + a.tobytes()


def decode_tensor(data: bytes) -> np.ndarray:
    if len(data) < _TENSOR_HEADER.size:
        raise TruncatedFile(f"tensor header needs 8 bytes, got {len(data)}")
    magic, version, ndim = _TENSOR_HEADER.unpack_from(data)
    if magic != TENSOR_MAGIC:
        raise FormatError(f"bad tensor magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported tensor version {version}")
    offset = _TENSOR_HEADER.size + 4 * ndim
    if len(data) < offset:
        raise TruncatedFile("tensor dims truncated")
    dims = struct.unpack_from(f"<{ndim}I", data, _TENSOR_HEADER.size)
    size = int(np.prod(dims, dtype=np.int64))
    body = len(data) - offset
    if body < 4 * size:
        raise TruncatedFile(f"tensor declares {size} values but holds {body} payload bytes")
    if body > 4 * size:
        raise FormatError(f"{body - 4 * size} trailing bytes after tensor payload")
    return np.frombuffer(data, dtype="<f4", count=size, offset=offset).reshape(dims)


def write_tensor(path, array: np.ndarray) -> None:
    _write_bytes(path, encode_tensor(array))


def read_tensor(path) -> np.ndarray:
    return decode_tensor(_read_bytes(path))


def sample_to_json(s: SpeedSample) -> dict:
    return {"id": s.id, "x": s.center[0], "y": s.center[1],
            "heading_deg": s.heading_deg, "speed_mph": s.speed_mph}


def write_labels(path, samples: Iterable[SpeedSample]) -> None:
    lines = [json.dumps(sample_to_json(s)) for s in samples]
    _write_bytes(path, ("\n".join(lines) + "\n" if lines else "").encode())


def read_labels(path) -> list[SpeedSample]:
    samples = []
    text = _read_bytes(path).decode("utf-8", errors="replace")
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            samples.append(SpeedSample(str(obj["id"]), (float(obj["x"]), float(obj["y"])),
                                       float(obj["heading_deg"]), float(obj["speed_mph"])))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}:{lineno}: bad label record: {exc}") from exc
    return samples
