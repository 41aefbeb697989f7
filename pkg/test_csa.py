"""
Test script for clip-specific <SEG> token allocation and frame routing
Run with pytest, or directly: python test_csa.py
"""

import os
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

# Add src directory to path
sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

from src.clipper import partition_clips
from src.csa import (
    allocate_seg_tokens,
    frame_routing,
    granularity_sweep,
    seg_token_count,
    token_for_frame,
)
from src.errors import IndexOutOfRange, InvalidArgument
from src.frame_io import Frame, FrameSequence


def tiny_sequence(count):
    return FrameSequence(tuple(Frame(np.zeros((1, 1, 3), dtype=np.uint8), t) for t in range(count)))


def test_one_token_per_clip():
    alloc = allocate_seg_tokens(10, 1)
    assert alloc.num_tokens == 10
    assert alloc.clip_to_token == tuple(range(10))


def test_last_four_clips_share_a_token():
    alloc = allocate_seg_tokens(10, 3)
    assert alloc.num_tokens == 3
    assert alloc.group_sizes == [3, 3, 4]
    assert alloc.clip_to_token[6:] == (2, 2, 2, 2)


def test_single_global_token():
    alloc = allocate_seg_tokens(10, 10)
    assert alloc.num_tokens == 1
    assert set(alloc.clip_to_token) == {0}


def test_granularity_sweep_token_counts():
    sweep = granularity_sweep(10, [10, 5, 3, 2, 1])
    assert [sweep[g].num_tokens for g in (10, 5, 3, 2, 1)] == [1, 2, 3, 5, 10]


def test_more_clips_per_token_than_clips():
    alloc = allocate_seg_tokens(3, 8)
    assert alloc.num_tokens == 1
    assert alloc.clip_to_token == (0, 0, 0)


def test_invalid_allocation_arguments():
    with pytest.raises(InvalidArgument):
        allocate_seg_tokens(0, 1)
    with pytest.raises(InvalidArgument):
        allocate_seg_tokens(5, 0)


def test_token_for_clip_out_of_range():
    with pytest.raises(IndexOutOfRange):
        allocate_seg_tokens(4, 1).token_for_clip(4)


@given(num_clips=st.integers(min_value=1, max_value=200), g=st.integers(min_value=1, max_value=250))
def test_allocation_invariants(num_clips, g):
    alloc = allocate_seg_tokens(num_clips, g)

    assert alloc.num_tokens == seg_token_count(num_clips, g)
    assert set(alloc.clip_to_token) == set(range(alloc.num_tokens))
    assert list(alloc.clip_to_token) == sorted(alloc.clip_to_token)
    sizes = alloc.group_sizes
    assert sum(sizes) == num_clips
    if g <= num_clips:
        assert all(size == g for size in sizes[:-1])
        assert g <= sizes[-1] < 2 * g


def test_frame_routing_one_token_per_clip():
    clip_set = partition_clips(tiny_sequence(100), 10)
    alloc = allocate_seg_tokens(len(clip_set), 1)
    assert token_for_frame(alloc, clip_set, 57) == 5


def test_frame_routing_shared_tail():
    clip_set = partition_clips(tiny_sequence(100), 10)
    alloc = allocate_seg_tokens(len(clip_set), 3)
    assert token_for_frame(alloc, clip_set, 95) == 2


def test_frame_position_past_end():
    clip_set = partition_clips(tiny_sequence(100), 10)
    alloc = allocate_seg_tokens(len(clip_set), 1)
    with pytest.raises(IndexOutOfRange):
        token_for_frame(alloc, clip_set, 100)


def test_routing_table_agrees_with_lookup():
    clip_set = partition_clips(tiny_sequence(47), 6)
    alloc = allocate_seg_tokens(len(clip_set), 2)
    routing = frame_routing(alloc, clip_set)
    assert len(routing) == 47
    assert routing == [token_for_frame(alloc, clip_set, t) for t in range(47)]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
