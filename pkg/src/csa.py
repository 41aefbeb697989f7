"""
Clip-specific allocation of segmentation tokens.

g consecutive clips share one <SEG> token; leftover clips fold into the last group.
"""

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from src.clipper import ClipSet
from src.errors import IndexOutOfRange, InvalidArgument


@dataclass(frozen=True)
class SegAllocation:
    num_clips: int
    clips_per_token: int
    num_tokens: int
    clip_to_token: Tuple[int, ...]

    def token_for_clip(self, clip_index: int) -> int:
        if clip_index < 0 or clip_index >= self.num_clips:
            raise IndexOutOfRange(f"clip {clip_index} outside [0, {self.num_clips})")
        return self.clip_to_token[clip_index]

    @property
    def group_sizes(self) -> List[int]:
        sizes = [0] * self.num_tokens
        for token in self.clip_to_token:
            sizes[token] += 1
        return sizes


def seg_token_count(num_clips: int, clips_per_token: int) -> int:
    return num_clips // clips_per_token if clips_per_token <= num_clips else 1


def allocate_seg_tokens(num_clips: int, clips_per_token: int) -> SegAllocation:
    if num_clips < 1:
        raise InvalidArgument(f"num_clips must be >= 1, got {num_clips}")
    if clips_per_token < 1:
        raise InvalidArgument(f"clips_per_token must be >= 1, got {clips_per_token}")

    tokens = seg_token_count(num_clips, clips_per_token)
    mapping = tuple(min(i // clips_per_token, tokens - 1) for i in range(num_clips))
    return SegAllocation(
        num_clips=num_clips,
        clips_per_token=clips_per_token,
        num_tokens=tokens,
        clip_to_token=mapping,
    )


def token_for_frame(alloc: SegAllocation, clip_set: ClipSet, frame_position: int) -> int:
    """<SEG> token whose hidden state prompts the mask decoder for this frame"""
    clip = clip_set.clip_for_position(frame_position)
    return alloc.token_for_clip(clip.index)


def frame_routing(alloc: SegAllocation, clip_set: ClipSet) -> List[int]:
    """Token per sampled frame, in sequence order"""
    routing = []
    for clip in clip_set:
        routing.extend([alloc.token_for_clip(clip.index)] * clip.member_count)
    return routing


def granularity_sweep(num_clips: int, granularities: Sequence[int]) -> Dict[int, SegAllocation]:
    return {g: allocate_seg_tokens(num_clips, g) for g in granularities}
