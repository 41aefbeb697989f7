"""
Test script for frame decoding/encoding and uniform sampling
Run with pytest, or directly: python test_frame_io.py
"""

import os
import struct
import sys

import numpy as np
import pytest

# Add src directory to path
sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

from src.errors import (
    DimensionMismatch,
    EmptyInput,
    IoFailure,
    MalformedHeader,
    MissingPath,
    TruncatedData,
)
from src.frame_io import (
    Frame,
    FrameSequence,
    decode_raw_stream,
    encode_ppm,
    load_frame,
    load_sequence,
    sample_uniform,
    write_frame,
    write_sequence,
)


def make_frame(h, w, value=0, index=0):
    return Frame(np.full((h, w, 3), value, dtype=np.uint8), index)


def random_frame(rng, h, w, index=0):
    return Frame(rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8), index)


def sequence_of(count, h=4, w=4):
    return FrameSequence(tuple(make_frame(h, w, value=t, index=t) for t in range(count)))


def test_raw_stream_decodes_three_frames(tmp_path):
    payload = bytes(range(36))
    path = tmp_path / "clip.raw"
    path.write_bytes(b"SVACRAW1" + struct.pack("<III", 2, 2, 3) + payload)

    seq = load_sequence(path, "raw_stream")

    assert len(seq) == 3
    assert all(frame.shape == (2, 2) for frame in seq)
    assert seq.source_indices == [0, 1, 2]
    assert seq[1].tobytes() == payload[12:24]


def test_ppm_directory_loads_in_name_order(tmp_path):
    write_frame(make_frame(4, 4, value=20), tmp_path / "001.ppm")
    write_frame(make_frame(4, 4, value=10), tmp_path / "000.ppm")

    seq = load_sequence(tmp_path, "ppm_dir")

    assert len(seq) == 2
    assert seq[0].data[0, 0, 0] == 10
    assert seq[1].data[0, 0, 0] == 20
    assert seq.source_indices == [0, 1]


def test_numeric_not_lexical_order(tmp_path):
    write_frame(make_frame(2, 2, value=1), tmp_path / "2.ppm")
    write_frame(make_frame(2, 2, value=2), tmp_path / "10.ppm")

    seq = load_sequence(tmp_path, "ppm_dir")

    assert [frame.data[0, 0, 0] for frame in seq] == [1, 2]


def test_bad_raw_magic():
    blob = b"XXXXXXXX" + struct.pack("<III", 2, 2, 1) + bytes(12)
    with pytest.raises(MalformedHeader):
        decode_raw_stream(blob)


def test_truncated_raw_payload():
    blob = b"SVACRAW1" + struct.pack("<III", 2, 2, 3) + bytes(20)
    with pytest.raises(TruncatedData):
        decode_raw_stream(blob)


def test_ppm_maxval_must_be_255(tmp_path):
    (tmp_path / "000.ppm").write_bytes(b"P6\n1 1\n65535\n" + bytes(6))
    with pytest.raises(MalformedHeader):
        load_sequence(tmp_path, "ppm_dir")


def test_ppm_bad_magic(tmp_path):
    (tmp_path / "000.ppm").write_bytes(b"P3\n1 1\n255\n0 0 0\n")
    with pytest.raises(MalformedHeader):
        load_sequence(tmp_path, "ppm_dir")


def test_ppm_truncated(tmp_path):
    (tmp_path / "000.ppm").write_bytes(b"P6\n2 2\n255\n" + bytes(5))
    with pytest.raises(TruncatedData):
        load_sequence(tmp_path, "ppm_dir")


def test_ppm_header_comments_are_skipped(tmp_path):
    (tmp_path / "000.ppm").write_bytes(b"P6\n# made by hand\n1 1\n255\n" + bytes([1, 2, 3]))
    seq = load_sequence(tmp_path, "ppm_dir")
    assert seq[0].data.tolist() == [[[1, 2, 3]]]


def test_dimension_mismatch(tmp_path):
    write_frame(make_frame(4, 4), tmp_path / "000.ppm")
    write_frame(make_frame(4, 2), tmp_path / "001.ppm")
    with pytest.raises(DimensionMismatch):
        load_sequence(tmp_path, "ppm_dir")


def test_missing_path(tmp_path):
    with pytest.raises(MissingPath):
        load_sequence(tmp_path / "nope", "ppm_dir")


def test_empty_directory(tmp_path):
    with pytest.raises(EmptyInput):
        load_sequence(tmp_path, "ppm_dir")


def test_constant_frame_ppm_payload(tmp_path):
    path = write_frame(make_frame(2, 2, value=0), tmp_path / "zero.ppm")
    blob = path.read_bytes()
    header = b"P6\n2 2\n255\n"
    assert blob.startswith(header)
    assert blob[len(header):] == bytes(12)


@pytest.mark.parametrize("fmt", ["ppm", "raw_stream_single"])
def test_write_frame_round_trip(tmp_path, fmt):
    rng = np.random.default_rng(7)
    for h, w in [(1, 1), (3, 5), (17, 9)]:
        frame = random_frame(rng, h, w)
        path = write_frame(frame, tmp_path / f"f_{h}_{w}.{fmt}", fmt)
        assert load_frame(path, "ppm" if fmt == "ppm" else "raw_stream_single").same_pixels(frame)


def test_write_to_missing_directory(tmp_path):
    with pytest.raises(IoFailure):
        write_frame(make_frame(2, 2), tmp_path / "missing" / "x.ppm")


def test_sequence_round_trip_through_raw_stream(tmp_path):
    rng = np.random.default_rng(3)
    seq = FrameSequence(tuple(random_frame(rng, 6, 4, t) for t in range(5)))
    path = write_sequence(seq, tmp_path / "seq.raw")

    loaded = load_sequence(path, "raw_stream")

    assert all(a.same_pixels(b) for a, b in zip(seq, loaded))


def test_encode_ppm_header():
    assert encode_ppm(make_frame(3, 7)).startswith(b"P6\n7 3\n255\n")


def test_sample_uniform_halves():
    assert sample_uniform(sequence_of(10), 5).source_indices == [0, 2, 4, 6, 8]


def test_sample_uniform_hundred_of_two_hundred():
    sampled = sample_uniform(sequence_of(200, 1, 1), 100)
    assert len(sampled) == 100
    assert sampled.source_indices == list(range(0, 200, 2))


def test_sample_uniform_short_sequence_unchanged():
    seq = sequence_of(7)
    assert sample_uniform(seq, 100) is seq


def test_sample_uniform_properties():
    for total in range(1, 60):
        seq = sequence_of(total, 1, 1)
        for target in range(1, 70):
            indices = sample_uniform(seq, target).source_indices
            assert len(indices) == min(total, target)
            assert indices[0] == 0
            assert all(b > a for a, b in zip(indices, indices[1:]))


def test_frame_is_immutable():
    frame = make_frame(2, 2)
    with pytest.raises(ValueError):
        frame.data[0, 0, 0] = 1


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
