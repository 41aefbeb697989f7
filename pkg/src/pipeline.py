"""
End-to-end runs: load -> sample -> clip -> compress -> write, plus the token baselines,
inspection and benchmarking. Per-clip work fans out over a thread pool and is collected
back in clip order, so outputs never depend on the thread count.
"""

import hashlib
import logging
import math
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from src.astc import CompressedClip, burn_grid_lines, compose_aggregate, compress_clip, plan_grid
from src.clipper import Clip, ClipSet, partition_clips
from src.config import KEEP_RATIO, KERNEL_A, MANIFEST_NAME, RunConfig
from src.errors import EmptyInput, IndexOutOfRange, InvalidArgument, IoFailure, NoComposite, SchemaViolation
from src.frame_io import Frame, FrameSequence, load_frame, load_sequence, sample_uniform, write_frame, write_png
from src.manifest import Manifest, SourceRecord, build_manifest, read_manifest, write_manifest
from src.resample import ResampleSpec
from src.token_ops import BASELINES, astc_token_count, compress_frame_tokens, load_scores, patch_tokenize

logger = logging.getLogger(__name__)


def parallel_map(fn: Callable, items: Sequence, threads: int, desc: str = "") -> List:
    """Ordered map over a thread pool with an optional progress bar"""
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = pool.map(fn, items)
        return list(tqdm(
            results,
            total=len(items),
            desc=desc,
            leave=False,
            disable=not sys.stderr.isatty(),
        ))


def tokens_per_frame(height: int, width: int, patch: int) -> int:
    """Encoder tokens for one frame: patches needed to cover it"""
    return math.ceil(height / patch) * math.ceil(width / patch)


def prepare_clips(seq: FrameSequence, sample_target: int, clip_length: int) -> Tuple[FrameSequence, ClipSet]:
    sampled = sample_uniform(seq, sample_target)
    return sampled, partition_clips(sampled, clip_length)


def compress_clips(clip_set: ClipSet, threads: int = 1, kernel_a: float = KERNEL_A) -> List[CompressedClip]:
    return parallel_map(lambda clip: compress_clip(clip, kernel_a), list(clip_set.clips), threads, "compress")


def output_names(clip_index: int) -> Tuple[str, str]:
    return f"clip_{clip_index}_anchor.ppm", f"clip_{clip_index}_composite.ppm"


def _ensure_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IoFailure(f"cannot create {path}: {e.strerror or e}") from e
    return path


def write_compressed(
    compressed: Sequence[CompressedClip],
    output_dir: Path,
    png: bool = False,
) -> Tuple[List[str], List[Optional[str]]]:
    """Write anchors/composites; returns file names relative to output_dir"""
    anchor_paths = []
    composite_paths = []
    for item in compressed:
        anchor_name, composite_name = output_names(item.clip_index)
        write_frame(item.anchor, output_dir / anchor_name)
        anchor_paths.append(anchor_name)
        if png:
            write_png(item.anchor, output_dir / anchor_name.replace(".ppm", ".png"))

        if item.composite is None:
            composite_paths.append(None)
            continue
        write_frame(item.composite, output_dir / composite_name)
        composite_paths.append(composite_name)
        if png:
            write_png(item.composite, output_dir / composite_name.replace(".ppm", ".png"))
    return anchor_paths, composite_paths


def run_config_record(config: RunConfig) -> Dict[str, Optional[str]]:
    return {key: None if value is None else str(value) for key, value in config.model_dump().items()}


def run_compress(config: RunConfig, png: bool = False) -> Dict[str, Any]:
    """cmd_compress body for the ASTC method"""
    if not config.input or not config.output:
        raise InvalidArgument("compress needs both an input and an output path")

    threads = config.resolved_threads()
    seq = load_sequence(config.input, config.format, threads)
    sampled, clip_set = prepare_clips(seq, config.sample_target, config.clip_length)
    logger.info("Sampled %d of %d frames into %d clips of %d", len(sampled), len(seq), len(clip_set), config.clip_length)

    compressed = compress_clips(clip_set, threads, config.kernel_a)

    output_dir = _ensure_dir(Path(config.output))
    anchor_paths, composite_paths = write_compressed(compressed, output_dir, png)

    manifest = build_manifest(
        compressed,
        clip_length=config.clip_length,
        clips_per_token=config.clips_per_token,
        s_per_frame=tokens_per_frame(sampled.height, sampled.width, config.patch_size),
        source=SourceRecord(
            path=str(Path(config.input).resolve()),
            format=config.format,
            source_frames=len(seq),
        ),
        resample_record=ResampleSpec(kernel_a=config.kernel_a).as_record(),
        anchor_paths=anchor_paths,
        composite_paths=composite_paths,
        run_config=run_config_record(config),
    )
    manifest_path = write_manifest(manifest, output_dir / MANIFEST_NAME)

    return {
        "manifest": manifest,
        "manifest_path": manifest_path,
        "source_frames": len(seq),
        "sampled_frames": len(sampled),
        "clips": len(compressed),
        "images": sum(item.frame_count for item in compressed),
        "ratio": Fraction(manifest.token_budget.ratio_numerator, manifest.token_budget.ratio_denominator),
    }


def pad_to_patch(frame: Frame, patch: int) -> Frame:
    """Zero-pad the bottom and right edges up to whole patches"""
    if patch < 1:
        raise InvalidArgument(f"patch size must be >= 1, got {patch}")
    pad_h, pad_w = -frame.height % patch, -frame.width % patch
    if not pad_h and not pad_w:
        return frame
    return Frame(np.pad(frame.data, ((0, pad_h), (0, pad_w), (0, 0))), frame.source_index)


def check_baselines(frame: Frame, patch: int, keep_ratio: float = KEEP_RATIO, methods: Sequence[str] = BASELINES) -> None:
    """Run each baseline once so a bad patch or ratio fails before any timing starts"""
    grid = patch_tokenize(pad_to_patch(frame, patch), patch)
    for method in methods:
        compress_frame_tokens(grid, method, keep_ratio)


def baseline_tokens(
    seq: FrameSequence,
    method: str,
    patch: int,
    keep_ratio: float = KEEP_RATIO,
    scores: Optional[np.ndarray] = None,
    threads: int = 1,
) -> List[np.ndarray]:
    """Per-frame surviving token vectors under a baseline compressor"""
    def _run(frame: Frame) -> np.ndarray:
        return compress_frame_tokens(patch_tokenize(pad_to_patch(frame, patch), patch), method, keep_ratio, scores)

    return parallel_map(_run, list(seq.frames), threads, method)


def run_baseline(config: RunConfig, scores_path: Optional[str] = None) -> Dict[str, Any]:
    """cmd_compress body for a token-level baseline: writes tokens_<method>.npz"""
    if not config.input or not config.output:
        raise InvalidArgument("compress needs both an input and an output path")

    threads = config.resolved_threads()
    seq = load_sequence(config.input, config.format, threads)
    sampled = sample_uniform(seq, config.sample_target)
    scores = load_scores(scores_path) if scores_path else None

    per_frame = baseline_tokens(sampled, config.method, config.patch_size, config.keep_ratio, scores, threads)
    s = tokens_per_frame(sampled.height, sampled.width, config.patch_size)

    output_dir = _ensure_dir(Path(config.output))
    target = output_dir / f"tokens_{config.method}.npz"
    try:
        np.savez(target, **{f"frame_{frame.source_index:06d}": tokens for frame, tokens in zip(sampled, per_frame)})
    except OSError as e:
        raise IoFailure(f"cannot write {target}: {e.strerror or e}") from e

    original = s * len(sampled)
    reduced = sum(tokens.shape[0] for tokens in per_frame)
    return {
        "path": target,
        "sampled_frames": len(sampled),
        "tokens_original": original,
        "tokens_reduced": reduced,
        "ratio": Fraction(reduced, original),
    }


def compare_methods(
    seq: FrameSequence,
    clip_length: int,
    patch: int,
    keep_ratio: float = KEEP_RATIO,
    threads: int = 1,
) -> List[Dict[str, Any]]:
    """Token counts of every method on the same sampled frames"""
    check_baselines(seq[0], patch, keep_ratio)
    s = tokens_per_frame(seq.height, seq.width, patch)
    original = s * len(seq)

    rows = []
    for method in BASELINES:
        reduced = sum(tokens.shape[0] for tokens in baseline_tokens(seq, method, patch, keep_ratio, None, threads))
        rows.append({"method": method, "tokens_original": original, "tokens_reduced": reduced,
                     "ratio": Fraction(reduced, original)})

    clip_set = partition_clips(seq, clip_length)
    reduced = astc_token_count(clip_set.clip_lengths, s)
    rows.append({"method": "astc", "tokens_original": original, "tokens_reduced": reduced,
                 "ratio": Fraction(reduced, original)})
    return rows


def synthetic_sequence(frames: int, height: int, width: int, seed: int = 0) -> FrameSequence:
    """Seeded smooth-gradient frames with noise, for bench and tests"""
    if frames < 1:
        raise EmptyInput("synthetic input needs at least one frame")
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width]
    result = []
    for t in range(frames):
        base = (xx * 3 + yy * 2 + t * 5)[:, :, np.newaxis] + np.array([0, 85, 170])
        noise = rng.integers(0, 32, size=(height, width, 3))
        result.append(Frame(((base + noise) % 256).astype(np.uint8), source_index=t))
    return FrameSequence(tuple(result))


def digest_compressed(compressed: Sequence[CompressedClip]) -> str:
    digest = hashlib.sha256()
    for item in compressed:
        digest.update(item.anchor.tobytes())
        if item.composite is not None:
            digest.update(item.composite.tobytes())
    return digest.hexdigest()


def _median_seconds(fn: Callable[[], Any], repeats: int) -> float:
    timings = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        timings.append(time.perf_counter() - start)
    return statistics.median(timings)


def bench(
    seq: FrameSequence,
    clip_length: int,
    patch: int,
    keep_ratio: float = KEEP_RATIO,
    threads: int = 1,
    repeats: int = 5,
    kernel_a: float = KERNEL_A,
) -> Dict[str, Any]:
    """Median throughput per method, plus a single- vs multi-thread determinism check"""
    if len(seq) == 0:
        raise EmptyInput("bench needs at least one frame")
    repeats = max(5, repeats)
    check_baselines(seq[0], patch, keep_ratio)
    clip_set = partition_clips(seq, clip_length)
    frames = len(seq)

    rows = []
    single = _median_seconds(lambda: compress_clips(clip_set, 1, kernel_a), repeats)
    multi = _median_seconds(lambda: compress_clips(clip_set, threads, kernel_a), repeats)
    rows.append({"method": "astc", "threads": 1, "seconds": single, "fps": frames / single})
    if threads > 1:
        rows.append({"method": "astc", "threads": threads, "seconds": multi, "fps": frames / multi})

    for method in BASELINES:
        seconds = _median_seconds(lambda: baseline_tokens(seq, method, patch, keep_ratio, None, threads), repeats)
        rows.append({"method": method, "threads": threads, "seconds": seconds, "fps": frames / seconds})

    single_digest = digest_compressed(compress_clips(clip_set, 1, kernel_a))
    multi_digest = digest_compressed(compress_clips(clip_set, threads, kernel_a))
    return {
        "frames": frames,
        "repeats": repeats,
        "rows": rows,
        "speedup": single / multi if multi > 0 else float("inf"),
        "deterministic": single_digest == multi_digest,
        "digest": single_digest,
    }


def inspect_clip(manifest_path: str, clip_index: int, output: Optional[str] = None) -> Path:
    """Recompose a clip's pre-resize aggregate with grid lines, for eyeballing"""
    manifest: Manifest = read_manifest(manifest_path)
    if clip_index < 0 or clip_index >= len(manifest.clips):
        raise IndexOutOfRange(f"clip {clip_index} outside [0, {len(manifest.clips)})")
    record = manifest.clips[clip_index]
    if record.layout is None:
        raise NoComposite(f"clip {clip_index} has a single member and no composite")

    seq = load_sequence(manifest.source.path, manifest.source.format)
    by_index = {frame.source_index: frame for frame in seq}
    missing = [i for i in record.member_source_indices if i not in by_index]
    if missing:
        raise SchemaViolation(f"source no longer holds frames {missing[:5]}")
    members = [by_index[i] for i in record.member_source_indices]

    start = sum(len(c.member_source_indices) for c in manifest.clips[:clip_index])
    clip = Clip(index=clip_index, anchor=members[0], followers=tuple(members[1:]), start=start)
    layout = plan_grid(len(clip.followers), clip.anchor.height, clip.anchor.width)
    if (layout.rows, layout.cols) != (record.layout.rows, record.layout.cols):
        raise SchemaViolation(
            f"clip {clip_index}: recorded {record.layout.rows}x{record.layout.cols} grid, "
            f"recomputed {layout.rows}x{layout.cols}"
        )

    preview = burn_grid_lines(compose_aggregate(clip, layout))
    manifest_file = Path(manifest_path)
    base_dir = manifest_file if manifest_file.is_dir() else manifest_file.parent
    target = Path(output) if output else base_dir / f"clip_{clip_index}_inspect.ppm"
    return write_frame(preview, target)


def verify_outputs(manifest: Manifest, base_dir: Path) -> List[str]:
    """Problems found checking every file named in the manifest; empty when all decode at the recorded size"""
    problems = []
    expected = (manifest.frame_height, manifest.frame_width)
    for record in manifest.clips:
        for name in (record.anchor_path, record.composite_path):
            if name is None:
                continue
            path = base_dir / name
            if not path.is_file():
                problems.append(f"{name}: missing")
                continue
            if load_frame(path).shape != expected:
                problems.append(f"{name}: wrong dimensions")
    return problems
