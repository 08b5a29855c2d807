import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rffs.core import PointCloud, SpeedSample
from rffs.errors import FormatError, TruncatedFile
from rffs.formats import (decode_tensor, decode_tile, encode_tensor, encode_tile, read_labels,
                          read_tensor, read_tile, write_labels, write_tensor, write_tile)


def f32_cloud(rng, n):
    xyz = rng.normal(0, 1e4, (n, 3))
    return PointCloud(xyz, rng.uniform(0, 255, n).astype(np.float32))


class TestTile:
    def test_empty_round_trip(self, tmp_path):
        write_tile(tmp_path / "e.pct", PointCloud.empty())
        data = (tmp_path / "e.pct").read_bytes()
        assert len(data) == 16 and data[:4] == b"PCT1"
        assert len(read_tile(tmp_path / "e.pct")) == 0

    def test_one_point(self, tmp_path):
        cloud = PointCloud.from_points([(1.5, -2.25, 1e-3, 17.0)])
        write_tile(tmp_path / "p.pct", cloud)
        back = read_tile(tmp_path / "p.pct")
        assert back.xyz.tobytes() == cloud.xyz.tobytes()
        assert back.intensity.tobytes() == cloud.intensity.tobytes()

    def test_layout(self):
        data = encode_tile(PointCloud.from_points([(1, 2, 3, 4), (5, 6, 7, 8)]))
        assert len(data) == 16 + 32 * 2
        assert struct.unpack_from("<4sHHQ", data) == (b"PCT1", 1, 0, 2)
        assert struct.unpack_from("<dddf", data, 16 + 32) == (5.0, 6.0, 7.0, 8.0)
        assert data[16 + 28:16 + 32] == b"\0" * 4

    def test_fuzzed_round_trip(self, rng):
        for n in (1, 2, 17, 1000):
            data = encode_tile(f32_cloud(rng, n))
            assert encode_tile(decode_tile(data)) == data

    def test_bad_magic(self):
        with pytest.raises(FormatError):
            decode_tile(b"LASF" + encode_tile(PointCloud.empty())[4:])

    def test_truncated(self):
        data = encode_tile(PointCloud.from_points([(1, 2, 3, 4)] * 3))
        with pytest.raises(TruncatedFile):
            decode_tile(data[:-1])
        with pytest.raises(TruncatedFile):
            decode_tile(data[:10])

    @given(st.data())
    @settings(max_examples=300, deadline=None)
    def test_mutations_never_crash(self, data):
        base = bytearray(encode_tile(PointCloud.from_points([(i, i * 2, -i, i) for i in range(5)])))
        cut = data.draw(st.integers(0, len(base)))
        blob = base[:cut]
        for _ in range(data.draw(st.integers(0, 6))):
            if blob:
                pos = data.draw(st.integers(0, len(blob) - 1))
                blob[pos] = data.draw(st.integers(0, 255))
        try:
            decode_tile(bytes(blob))
        except FormatError:
            pass


class TestTensor:
    def test_round_trip(self, rng, tmp_path):
        a = rng.normal(size=(30, 7, 7)).astype(np.float32)
        write_tensor(tmp_path / "t.fts", a)
        raw = (tmp_path / "t.fts").read_bytes()
        assert len(raw) == 8 + 4 * 3 + 4 * a.size
        assert struct.unpack_from("<4sHH3I", raw) == (b"FTS1", 1, 3, 30, 7, 7)
        assert read_tensor(tmp_path / "t.fts").tobytes() == a.tobytes()

    def test_truncated(self):
        with pytest.raises(TruncatedFile):
            decode_tensor(encode_tensor(np.zeros((2, 2)))[:-2])

    @given(st.binary(max_size=64))
    def test_garbage(self, blob):
        try:
            decode_tensor(b"FTS1" + blob)
        except FormatError:
            pass


class TestLabels:
    def test_round_trip(self, tmp_path):
        samples = [SpeedSample("a", (1.0, 2.0), 10.0, 45.0), SpeedSample("b", (3.0, -4.5), 0.0, 70.2)]
        write_labels(tmp_path / "l.jsonl", samples)
        assert read_labels(tmp_path / "l.jsonl") == samples

    @pytest.mark.parametrize("line", ['{"id": "a"}', "nope",
                                      '{"id":"a","x":0,"y":0,"heading_deg":0,"speed_mph":-1}'])
    def test_bad_record(self, tmp_path, line):
        (tmp_path / "l.jsonl").write_text(line + "\n")
        with pytest.raises(FormatError):
            read_labels(tmp_path / "l.jsonl")
