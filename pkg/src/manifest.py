"""
Compression manifest: the on-disk contract for downstream consumers.

Canonical JSON, keys in declaration order, no floating-point numbers
(the compression ratio is an integer numerator/denominator pair).
"""

import json
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, ValidationError
from pydantic_core import from_json

from src.config import MANIFEST_NAME, MANIFEST_VERSION
from src.cost_model import token_budget
from src.csa import allocate_seg_tokens
from src.errors import IoFailure, MissingPath, SchemaViolation, VersionMismatch

PathLike = Union[str, Path]


class _Record(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True, frozen=True)


class SourceRecord(_Record):
    path: str
    format: str
    source_frames: int


class ResampleRecord(_Record):
    kernel_a: str
    coordinate_convention: str
    boundary: str
    rounding: str


class LayoutRecord(_Record):
    rows: int
    cols: int
    num_tiles: int
    pad_cells: int


class ClipRecord(_Record):
    clip_index: int
    member_source_indices: List[int]
    anchor_path: str
    composite_path: Optional[str]
    layout: Optional[LayoutRecord]
    seg_token_index: int


class SegAllocationRecord(_Record):
    clips_per_token: int
    num_tokens: int


class TokenBudgetRecord(_Record):
    s_per_frame: int
    tokens_original: int
    tokens_reduced: int
    ratio_numerator: int
    ratio_denominator: int


class Manifest(_Record):
    format_version: int
    frame_height: int
    frame_width: int
    total_frames: int
    clip_length: int
    short_final_clip: bool
    source: SourceRecord
    resample_spec: ResampleRecord
    clips: List[ClipRecord]
    seg_allocation: SegAllocationRecord
    frame_to_token: List[int]
    token_budget: TokenBudgetRecord
    run_config: Dict[str, Optional[str]]


def validate_manifest(manifest: Manifest) -> Manifest:
    """Semantic checks beyond the schema; raises SchemaViolation on the first problem"""

    def fail(message: str):
        raise SchemaViolation(message)

    clips = manifest.clips
    if not clips:
        fail("manifest has no clips")
    if manifest.frame_height < 1 or manifest.frame_width < 1:
        fail(f"invalid frame size {manifest.frame_height}x{manifest.frame_width}")
    if manifest.clip_length < 2:
        fail(f"clip_length must be >= 2, got {manifest.clip_length}")

    indices = [clip.clip_index for clip in clips]
    if len(set(indices)) != len(indices):
        fail("duplicated clip_index")
    if indices != list(range(len(clips))):
        fail("clip_index values must run 0..N-1 in order")

    members = [index for clip in clips for index in clip.member_source_indices]
    if any(not clip.member_source_indices for clip in clips):
        fail("clip with no members")
    if any(b <= a for a, b in zip(members, members[1:])) or (members and members[0] < 0):
        fail("member_source_indices are not contiguous and increasing across clips")
    if len(members) != manifest.total_frames:
        fail(f"total_frames {manifest.total_frames} but clips hold {len(members)} frames")

    for clip in clips[:-1]:
        if len(clip.member_source_indices) != manifest.clip_length:
            fail(f"clip {clip.clip_index} has {len(clip.member_source_indices)} members, expected {manifest.clip_length}")
    if len(clips[-1].member_source_indices) > manifest.clip_length:
        fail(f"final clip exceeds clip_length {manifest.clip_length}")
    short = len(clips[-1].member_source_indices) < manifest.clip_length
    if short != manifest.short_final_clip:
        fail("short_final_clip flag disagrees with the final clip")

    for clip in clips:
        if (clip.composite_path is None) != (clip.layout is None):
            fail(f"clip {clip.clip_index}: composite_path and layout must both be set or both be null")
        single = len(clip.member_source_indices) == 1
        if single != (clip.layout is None):
            fail(f"clip {clip.clip_index}: composite must be absent iff the clip has a single member")
        layout = clip.layout
        if layout is not None:
            if min(layout.rows, layout.cols, layout.num_tiles) < 1:
                fail(f"clip {clip.clip_index}: layout dimensions must be positive")
            if layout.num_tiles != len(clip.member_source_indices) - 1:
                fail(f"clip {clip.clip_index}: layout num_tiles disagrees with follower count")
            if layout.pad_cells != layout.rows * layout.cols - layout.num_tiles:
                fail(f"clip {clip.clip_index}: pad_cells != rows*cols - num_tiles")

    seg = manifest.seg_allocation
    if seg.clips_per_token < 1:
        fail("clips_per_token must be >= 1")
    expected = allocate_seg_tokens(len(clips), seg.clips_per_token)
    if seg.num_tokens != expected.num_tokens:
        fail(f"num_tokens {seg.num_tokens}, expected {expected.num_tokens}")
    for clip in clips:
        if not 0 <= clip.seg_token_index < seg.num_tokens:
            fail(f"clip {clip.clip_index}: seg_token_index {clip.seg_token_index} outside [0, {seg.num_tokens})")
        if clip.seg_token_index != expected.clip_to_token[clip.clip_index]:
            fail(f"clip {clip.clip_index}: seg_token_index disagrees with the allocation")

    routing = [clip.seg_token_index for clip in clips for _ in clip.member_source_indices]
    if manifest.frame_to_token != routing:
        fail("frame_to_token disagrees with the per-clip allocation")

    budget = manifest.token_budget
    if budget.s_per_frame < 1:
        fail("s_per_frame must be >= 1")
    report = token_budget(manifest.total_frames, manifest.clip_length, budget.s_per_frame)
    if (budget.tokens_original, budget.tokens_reduced) != (report.tokens_original, report.tokens_reduced):
        fail("token_budget totals disagree with the clip partition")
    if (budget.ratio_numerator, budget.ratio_denominator) != (report.ratio.numerator, report.ratio.denominator):
        fail("token_budget ratio must be tokens_reduced/tokens_original in lowest terms")

    return manifest


def build_manifest(
    compressed: Sequence,
    clip_length: int,
    clips_per_token: int,
    s_per_frame: int,
    source: SourceRecord,
    resample_record: Dict[str, str],
    anchor_paths: Sequence[str],
    composite_paths: Sequence[Optional[str]],
    run_config: Dict[str, Optional[str]],
) -> Manifest:
    """Assemble a manifest from compressed clips (in clip order) and their output file names"""
    allocation = allocate_seg_tokens(len(compressed), clips_per_token)
    total_frames = sum(len(item.member_source_indices) for item in compressed)
    report = token_budget(total_frames, clip_length, s_per_frame)
    first = compressed[0].anchor

    clips = []
    routing = []
    for item, anchor_path, composite_path in zip(compressed, anchor_paths, composite_paths):
        layout = None
        if item.layout is not None:
            layout = LayoutRecord(
                rows=item.layout.rows,
                cols=item.layout.cols,
                num_tiles=item.layout.num_tiles,
                pad_cells=item.layout.pad_cells,
            )
        token = allocation.token_for_clip(item.clip_index)
        clips.append(ClipRecord(
            clip_index=item.clip_index,
            member_source_indices=list(item.member_source_indices),
            anchor_path=anchor_path,
            composite_path=composite_path,
            layout=layout,
            seg_token_index=token,
        ))
        routing.extend([token] * len(item.member_source_indices))

    manifest = Manifest(
        format_version=MANIFEST_VERSION,
        frame_height=first.height,
        frame_width=first.width,
        total_frames=total_frames,
        clip_length=clip_length,
        short_final_clip=len(compressed[-1].member_source_indices) < clip_length,
        source=source,
        resample_spec=ResampleRecord(**resample_record),
        clips=clips,
        seg_allocation=SegAllocationRecord(
            clips_per_token=clips_per_token,
            num_tokens=allocation.num_tokens,
        ),
        frame_to_token=routing,
        token_budget=TokenBudgetRecord(
            s_per_frame=s_per_frame,
            tokens_original=report.tokens_original,
            tokens_reduced=report.tokens_reduced,
            ratio_numerator=report.ratio.numerator,
            ratio_denominator=report.ratio.denominator,
        ),
        run_config=run_config,
    )
    return validate_manifest(manifest)


def manifest_ratio(manifest: Manifest) -> Fraction:
    return Fraction(manifest.token_budget.ratio_numerator, manifest.token_budget.ratio_denominator)


def dumps_manifest(manifest: Manifest) -> str:
    return manifest.model_dump_json(indent=2) + "\n"


def write_manifest(manifest: Manifest, path: PathLike) -> Path:
    target = Path(path)
    if target.is_dir():
        target = target / MANIFEST_NAME
    text = dumps_manifest(validate_manifest(manifest))
    try:
        target.write_text(text, encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot write {target}: {e.strerror or e}") from e
    return target


def parse_manifest(text: Union[str, bytes]) -> Manifest:
    try:
        data = from_json(text)
    except ValueError as e:
        raise SchemaViolation(f"manifest is not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise SchemaViolation("manifest must be a JSON object")
    if "format_version" not in data:
        raise SchemaViolation("missing required field 'format_version'")
    version = data["format_version"]
    if version != MANIFEST_VERSION or isinstance(version, bool):
        raise VersionMismatch(f"manifest format_version {version!r} is not supported (expected {MANIFEST_VERSION})")

    try:
        manifest = Manifest.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise SchemaViolation(f"{where}: {first['msg']} ({e.error_count()} problem(s))") from None
    return validate_manifest(manifest)


def read_manifest(path: PathLike) -> Manifest:
    source = Path(path)
    if source.is_dir():
        source = source / MANIFEST_NAME
    if not source.is_file():
        raise MissingPath(f"{source} does not exist")
    return parse_manifest(source.read_bytes())


def manifest_schema_text() -> str:
    return json.dumps(Manifest.model_json_schema(), indent=2) + "\n"
