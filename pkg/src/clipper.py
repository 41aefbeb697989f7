"""
Partition a sampled frame sequence into ordered, non-overlapping clips
"""

from dataclasses import dataclass
from typing import List, Tuple

from src.errors import EmptyInput, IndexOutOfRange, InvalidClipLength
from src.frame_io import Frame, FrameSequence


@dataclass(frozen=True)
class Clip:
    """A contiguous run of frames: anchor first, followers after"""

    index: int
    anchor: Frame
    followers: Tuple[Frame, ...]
    start: int  # position of the anchor in the sampled sequence

    @property
    def members(self) -> Tuple[Frame, ...]:
        return (self.anchor,) + self.followers

    @property
    def member_count(self) -> int:
        return 1 + len(self.followers)

    @property
    def member_source_indices(self) -> List[int]:
        return [frame.source_index for frame in self.members]

    @property
    def positions(self) -> range:
        return range(self.start, self.start + self.member_count)


@dataclass(frozen=True)
class ClipSet:
    clips: Tuple[Clip, ...]
    nominal_length: int

    def __len__(self) -> int:
        return len(self.clips)

    def __iter__(self):
        return iter(self.clips)

    @property
    def total_frames(self) -> int:
        return sum(clip.member_count for clip in self.clips)

    @property
    def has_short_final_clip(self) -> bool:
        return bool(self.clips) and self.clips[-1].member_count < self.nominal_length

    @property
    def clip_lengths(self) -> List[int]:
        return [clip.member_count for clip in self.clips]

    def clip_for_position(self, position: int) -> Clip:
        """Clip holding the frame at this position of the sampled sequence"""
        if position < 0 or position >= self.total_frames:
            raise IndexOutOfRange(f"frame position {position} outside [0, {self.total_frames})")
        return self.clips[position // self.nominal_length]


def partition_clips(seq: FrameSequence, m: int) -> ClipSet:
    """Split into ceil(T/m) clips; only the last may be shorter than m"""
    if m < 2:
        raise InvalidClipLength(f"clip length must be >= 2, got {m}")
    if len(seq) == 0:
        raise EmptyInput("cannot partition an empty sequence")

    clips = []
    for i, start in enumerate(range(0, len(seq), m)):
        members = seq.frames[start:start + m]
        clips.append(Clip(index=i, anchor=members[0], followers=tuple(members[1:]), start=start))

    return ClipSet(clips=tuple(clips), nominal_length=m)
