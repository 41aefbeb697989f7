"""
Anchor-based spatio-temporal compression.

Each clip keeps its first frame (anchor) untouched. The remaining frames are tiled
left-to-right, top-to-bottom into a grid whose shape stays close to the frame aspect,
unused cells are zero-filled, and the aggregate is bicubic-resized back to one frame.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np

from src.clipper import Clip
from src.config import KERNEL_A
from src.errors import IndexOutOfRange, InvalidArgument, LayoutMismatch
from src.frame_io import Frame
from src.resample import bicubic_resize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridLayout:
    rows: int
    cols: int
    tile_height: int
    tile_width: int
    num_tiles: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or self.num_tiles < 1:
            raise InvalidArgument(f"invalid layout {self.rows}x{self.cols} for {self.num_tiles} tiles")
        if self.rows * self.cols < self.num_tiles:
            raise InvalidArgument(f"{self.rows}x{self.cols} grid cannot hold {self.num_tiles} tiles")

    @property
    def pad_cells(self) -> int:
        return self.rows * self.cols - self.num_tiles

    @property
    def height(self) -> int:
        return self.rows * self.tile_height

    @property
    def width(self) -> int:
        return self.cols * self.tile_width

    def cell_origin(self, cell: int) -> Tuple[int, int]:
        """Top-left pixel of row-major cell"""
        row, col = divmod(cell, self.cols)
        return row * self.tile_height, col * self.tile_width


@dataclass(frozen=True)
class AggregateImage:
    image: Frame
    layout: GridLayout


@dataclass(frozen=True)
class CompressedClip:
    """The (anchor, composite) pair for one clip"""

    clip_index: int
    anchor: Frame
    composite: Optional[Frame]
    layout: Optional[GridLayout]
    member_source_indices: Tuple[int, ...]

    @property
    def frame_count(self) -> int:
        return 1 if self.composite is None else 2


def aspect_distortion(rows: int, cols: int, frame_h: int, frame_w: int) -> Fraction:
    """Monotone in |ln(rows*H / (cols*W)) - ln(H/W)|; exact so ties compare equal"""
    ratio = Fraction(rows * frame_h, cols * frame_w) / Fraction(frame_h, frame_w)
    return max(ratio, 1 / ratio)


def plan_grid(num_tiles: int, frame_h: int, frame_w: int) -> GridLayout:
    """Grid closest to the frame aspect; ties go to fewer pad cells, then fewer rows"""
    if num_tiles < 1:
        raise InvalidArgument(f"num_tiles must be >= 1, got {num_tiles}")
    if frame_h < 1 or frame_w < 1:
        raise InvalidArgument(f"frame size must be at least 1x1, got {frame_h}x{frame_w}")

    best = None
    for rows in range(1, num_tiles + 1):
        for cols in range(1, num_tiles + 1):
            if rows * cols < num_tiles:
                continue
            key = (aspect_distortion(rows, cols, frame_h, frame_w), rows * cols - num_tiles, rows)
            if best is None or key < best[0]:
                best = (key, rows, cols)

    _, rows, cols = best
    return GridLayout(rows=rows, cols=cols, tile_height=frame_h, tile_width=frame_w, num_tiles=num_tiles)


def compose_aggregate(clip: Clip, layout: GridLayout) -> AggregateImage:
    followers = clip.followers
    if not followers:
        raise LayoutMismatch(f"clip {clip.index} has no followers to compose")
    if layout.num_tiles != len(followers):
        raise LayoutMismatch(
            f"layout holds {layout.num_tiles} tiles but clip {clip.index} has {len(followers)} followers"
        )
    if (layout.tile_height, layout.tile_width) != clip.anchor.shape:
        raise LayoutMismatch(
            f"layout tiles are {layout.tile_height}x{layout.tile_width}, "
            f"frames are {clip.anchor.height}x{clip.anchor.width}"
        )

    canvas = np.zeros((layout.height, layout.width, 3), dtype=np.uint8)
    for cell, frame in enumerate(followers):
        top, left = layout.cell_origin(cell)
        canvas[top:top + layout.tile_height, left:left + layout.tile_width] = frame.data

    return AggregateImage(image=Frame(canvas, clip.anchor.source_index), layout=layout)


def extract_tile(agg: AggregateImage, layout: GridLayout, tile_index: int) -> Frame:
    if tile_index < 0 or tile_index >= layout.num_tiles:
        raise IndexOutOfRange(f"tile {tile_index} outside [0, {layout.num_tiles})")
    top, left = layout.cell_origin(tile_index)
    tile = agg.image.data[top:top + layout.tile_height, left:left + layout.tile_width]
    return Frame(tile.copy())


def pad_cells_are_zero(agg: AggregateImage) -> bool:
    layout = agg.layout
    for cell in range(layout.num_tiles, layout.rows * layout.cols):
        top, left = layout.cell_origin(cell)
        if agg.image.data[top:top + layout.tile_height, left:left + layout.tile_width].any():
            return False
    return True


def compress_clip(clip: Clip, kernel_a: float = KERNEL_A) -> CompressedClip:
    """Anchor passes through; followers become one composite of anchor size"""
    composite = None
    layout = None
    if clip.followers:
        layout = plan_grid(len(clip.followers), clip.anchor.height, clip.anchor.width)
        aggregate = compose_aggregate(clip, layout)
        composite = bicubic_resize(aggregate.image, clip.anchor.height, clip.anchor.width, kernel_a)
        logger.debug(
            "clip %d: %d followers -> %dx%d grid (%d pad)",
            clip.index, layout.num_tiles, layout.rows, layout.cols, layout.pad_cells,
        )

    return CompressedClip(
        clip_index=clip.index,
        anchor=clip.anchor,
        composite=composite,
        layout=layout,
        member_source_indices=tuple(clip.member_source_indices),
    )


def burn_grid_lines(agg: AggregateImage, value: int = 255) -> Frame:
    """Copy of the aggregate with 1-px lines on interior cell boundaries"""
    canvas = agg.image.data.copy()
    layout = agg.layout
    for row in range(1, layout.rows):
        canvas[row * layout.tile_height, :, :] = value
    for col in range(1, layout.cols):
        canvas[:, col * layout.tile_width, :] = value
    return Frame(canvas, agg.image.source_index)
