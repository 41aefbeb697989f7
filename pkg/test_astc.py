"""
Test script for clip partitioning and anchor + composite compression
Run with pytest, or directly: python test_astc.py
"""

import math
import os
import sys

import numpy as np
import pytest

# Add src directory to path
sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

from src.astc import (
    AggregateImage,
    GridLayout,
    burn_grid_lines,
    compose_aggregate,
    compress_clip,
    extract_tile,
    pad_cells_are_zero,
    plan_grid,
)
from src.clipper import Clip, partition_clips
from src.cost_model import clip_token_counts
from src.errors import IndexOutOfRange, InvalidClipLength, LayoutMismatch
from src.frame_io import Frame, FrameSequence
from src.resample import bicubic_resize

ASPECTS = [(1, 1), (4, 3), (16, 9), (9, 16)]


def constant_sequence(count, h=8, w=8, value=7):
    return FrameSequence(tuple(Frame(np.full((h, w, 3), value, np.uint8), t) for t in range(count)))


def random_clip(rng, members, h, w, index=0):
    frames = [Frame(rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8), t) for t in range(members)]
    return Clip(index=index, anchor=frames[0], followers=tuple(frames[1:]), start=0)


def brute_force_grid(num_tiles, h, w):
    """Exhaustive search scored in floating point, ties within 1e-12"""
    candidates = []
    for rows in range(1, num_tiles + 1):
        for cols in range(1, num_tiles + 1):
            if rows * cols >= num_tiles:
                score = abs(math.log((rows * h) / (cols * w)) - math.log(h / w))
                candidates.append((score, rows * cols - num_tiles, rows, cols))
    best = min(score for score, *_ in candidates)
    tied = [c for c in candidates if c[0] - best <= 1e-12]
    _, _, rows, cols = min(tied, key=lambda c: (c[1], c[2]))
    return rows, cols


# ---------------------------------------------------------------------------
# clipper
# ---------------------------------------------------------------------------

def test_hundred_frames_ten_clips():
    clips = partition_clips(constant_sequence(100, 2, 2), 10)
    assert len(clips) == 10
    assert clips.clip_lengths == [10] * 10
    assert not clips.has_short_final_clip


def test_remainder_clip_is_kept():
    clips = partition_clips(constant_sequence(23, 2, 2), 10)
    assert clips.clip_lengths == [10, 10, 3]
    assert clips.has_short_final_clip


def test_single_clip():
    clips = partition_clips(constant_sequence(10, 2, 2), 10)
    assert len(clips) == 1
    assert clips.clips[0].member_count == 10


def test_clip_length_below_two():
    with pytest.raises(InvalidClipLength):
        partition_clips(constant_sequence(4, 2, 2), 1)


def test_partition_reproduces_sequence():
    for total in range(1, 40):
        seq = constant_sequence(total, 1, 1)
        for m in range(2, 12):
            clips = partition_clips(seq, m)
            assert len(clips) == -(-total // m)
            flattened = [i for clip in clips for i in clip.member_source_indices]
            assert flattened == seq.source_indices
            assert all(len(c.followers) == c.member_count - 1 for c in clips)
            assert all(c.member_count == m for c in clips.clips[:-1])


# ---------------------------------------------------------------------------
# plan_grid
# ---------------------------------------------------------------------------

def test_four_tiles_square_frames():
    layout = plan_grid(4, 128, 128)
    assert (layout.rows, layout.cols, layout.pad_cells) == (2, 2, 0)


def test_nine_tiles_any_aspect():
    for h, w in [(128, 128), (360, 640), (640, 360), (3, 4)]:
        layout = plan_grid(9, h, w)
        assert (layout.rows, layout.cols, layout.pad_cells) == (3, 3, 0)


def test_seven_tiles_pads_two_cells():
    layout = plan_grid(7, 128, 128)
    assert (layout.rows, layout.cols, layout.pad_cells) == (3, 3, 2)
    assert (layout.rows, layout.cols) == brute_force_grid(7, 128, 128)


def test_grid_matches_exhaustive_search():
    for h, w in ASPECTS:
        for num_tiles in range(1, 65):
            layout = plan_grid(num_tiles, h, w)
            assert (layout.rows, layout.cols) == brute_force_grid(num_tiles, h, w), (num_tiles, h, w)
            assert layout.rows * layout.cols >= num_tiles
            assert layout.pad_cells == layout.rows * layout.cols - num_tiles


def test_layout_rejects_too_few_cells():
    with pytest.raises(ValueError):
        GridLayout(rows=2, cols=2, tile_height=4, tile_width=4, num_tiles=5)


# ---------------------------------------------------------------------------
# compose / extract
# ---------------------------------------------------------------------------

def test_constant_clip_aggregate_is_constant():
    clip = partition_clips(constant_sequence(5, 4, 4, 7), 5).clips[0]
    layout = plan_grid(4, 4, 4)
    aggregate = compose_aggregate(clip, layout)
    assert aggregate.image.shape == (8, 8)
    assert (aggregate.image.data == 7).all()


def test_three_followers_fill_row_major_with_zero_pad():
    values = [10, 20, 30, 40]
    seq = FrameSequence(tuple(Frame(np.full((2, 3, 3), v, np.uint8), t) for t, v in enumerate(values)))
    clip = partition_clips(seq, 4).clips[0]
    layout = GridLayout(rows=2, cols=2, tile_height=2, tile_width=3, num_tiles=3)

    image = compose_aggregate(clip, layout).image.data

    assert (image[0:2, 0:3] == 20).all()
    assert (image[0:2, 3:6] == 30).all()
    assert (image[2:4, 0:3] == 40).all()
    assert (image[2:4, 3:6] == 0).all()


def test_layout_mismatch():
    clip = partition_clips(constant_sequence(5, 4, 4), 5).clips[0]
    with pytest.raises(LayoutMismatch):
        compose_aggregate(clip, plan_grid(3, 4, 4))


def test_tile_zero_is_top_left_block():
    rng = np.random.default_rng(0)
    clip = random_clip(rng, 6, 5, 7)
    layout = plan_grid(5, 5, 7)
    aggregate = compose_aggregate(clip, layout)
    assert np.array_equal(extract_tile(aggregate, layout, 0).data, aggregate.image.data[:5, :7])


def test_tile_index_out_of_range():
    clip = partition_clips(constant_sequence(5, 4, 4), 5).clips[0]
    layout = plan_grid(4, 4, 4)
    aggregate = compose_aggregate(clip, layout)
    with pytest.raises(IndexOutOfRange):
        extract_tile(aggregate, layout, layout.num_tiles)


def test_pre_resize_losslessness_randomized():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        members = int(rng.integers(2, 13))
        h = int(rng.integers(1, 145))
        w = int(rng.integers(1, 257))
        clip = random_clip(rng, members, h, w)
        layout = plan_grid(len(clip.followers), h, w)
        aggregate = compose_aggregate(clip, layout)

        assert aggregate.image.shape == (layout.rows * h, layout.cols * w)
        for j, follower in enumerate(clip.followers):
            assert extract_tile(aggregate, layout, j).same_pixels(follower)
        assert pad_cells_are_zero(aggregate)


def test_grid_lines_drawn_on_interior_boundaries():
    clip = partition_clips(constant_sequence(5, 4, 4, 0), 5).clips[0]
    layout = plan_grid(4, 4, 4)
    preview = burn_grid_lines(compose_aggregate(clip, layout)).data
    assert (preview[4, :, :] == 255).all()
    assert (preview[:, 4, :] == 255).all()
    assert preview[0, 0, 0] == 0


# ---------------------------------------------------------------------------
# compress_clip
# ---------------------------------------------------------------------------

def test_single_member_clip_has_no_composite():
    clip = partition_clips(constant_sequence(1, 4, 4), 10).clips[0]
    compressed = compress_clip(clip)
    assert compressed.composite is None
    assert compressed.layout is None
    assert compressed.frame_count == 1


def test_ten_identical_frames_give_exact_constant_composite():
    clip = partition_clips(constant_sequence(10, 12, 12, 99), 10).clips[0]
    compressed = compress_clip(clip)
    assert (compressed.layout.rows, compressed.layout.cols, compressed.layout.pad_cells) == (3, 3, 0)
    assert (compressed.composite.data == 99).all()


def test_composite_matches_anchor_dimensions_and_budget():
    rng = np.random.default_rng(8)
    clip = random_clip(rng, 10, 128, 128)
    compressed = compress_clip(clip)

    assert compressed.composite.shape == (128, 128)
    assert compressed.anchor is clip.anchor
    s = (128 // 16) ** 2
    assert clip_token_counts(clip.member_count, s) == (640, 128)


def test_composite_is_resized_aggregate():
    rng = np.random.default_rng(9)
    clip = random_clip(rng, 8, 9, 16)
    compressed = compress_clip(clip)
    layout = plan_grid(7, 9, 16)
    expected = bicubic_resize(compose_aggregate(clip, layout).image, 9, 16)
    assert compressed.composite.same_pixels(expected)


def test_anchor_bytes_untouched():
    rng = np.random.default_rng(10)
    for members in range(1, 13):
        clip = random_clip(rng, members, 6, 10)
        before = clip.anchor.tobytes()
        compressed = compress_clip(clip)
        assert compressed.anchor.tobytes() == before
        assert compressed.frame_count == (1 if members == 1 else 2)
        if compressed.composite is not None:
            assert compressed.composite.shape == clip.anchor.shape


def test_aggregate_type_round_trip():
    rng = np.random.default_rng(12)
    clip = random_clip(rng, 4, 3, 3)
    layout = plan_grid(3, 3, 3)
    aggregate = compose_aggregate(clip, layout)
    assert isinstance(aggregate, AggregateImage)
    assert aggregate.layout == layout


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
