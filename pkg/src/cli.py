"""
Command-line entry point: compress, plan, compare, inspect, bench, schema
"""

import functools
import logging
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.table import Table

from src.config import (
    BENCH_FRAMES,
    BENCH_REPEATS,
    BYTES_PER_ELEMENT,
    CLIP_LENGTH,
    CLIPS_PER_TOKEN,
    COMPARE_CLIP_LENGTH,
    COMPARE_FRAMES,
    HIDDEN_DIM,
    LAYERS,
    LOG_LEVEL,
    MAX_SEQUENCE_LENGTH,
    SAMPLE_TARGET,
    SYNTHETIC_SIZE,
    TOKENS_PER_FRAME,
    RunConfig,
    build_run_config,
    setup_logging,
)
from src.cost_model import (
    FLOPS_FORMULA,
    KV_FORMULA,
    ModelShape,
    fits_context,
    format_percent,
    frames_sweep,
    plan_table,
    write_plan_csv,
)
from src.csa import granularity_sweep
from src.errors import EmptyInput, SvacError
from src.frame_io import FrameSequence, load_sequence, sample_uniform
from src.manifest import manifest_schema_text
from src.pipeline import bench, compare_methods, inspect_clip, run_baseline, run_compress, synthetic_sequence

logger = logging.getLogger(__name__)

app = typer.Typer(add_completion=False, help="Anchor + composite video frame compression toolkit")
console = Console()

GRANULARITIES = (10, 5, 3, 2, 1)
FRAME_COUNTS = tuple(range(10, 101, 10))


def reports_errors(command):
    """Turn toolkit errors into a single 'error: <code> <message>' line and exit 1"""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except SvacError as e:
            typer.echo(f"error: {e.code} {e}", err=True)
            raise typer.Exit(code=1)
        except typer.Exit:
            raise
        except Exception as e:
            logger.debug("Unexpected failure", exc_info=True)
            typer.echo(f"error: Internal {e}", err=True)
            raise typer.Exit(code=1)

    return wrapper


@app.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging")):
    setup_logging("DEBUG" if verbose else LOG_LEVEL)


def _section(title: str):
    console.print()
    console.rule(f"[bold]{title}")


def _echo_config(config: RunConfig):
    table = Table(title="Run configuration", show_header=False)
    for key, value in config.model_dump().items():
        table.add_row(key, str(value))
    console.print(table)


def _load_or_synthesize(
    input: Optional[str],
    format: str,
    frames: int,
    height: int,
    width: int,
    seed: int,
    threads: int,
) -> FrameSequence:
    if input:
        return load_sequence(input, format, threads)
    return synthetic_sequence(frames, height, width, seed)


@app.command()
@reports_errors
def compress(
    input: Optional[str] = typer.Option(None, "--input", "-i", help="PPM directory or SVACRAW1 file"),
    format: Optional[str] = typer.Option(None, "--format", help="ppm_dir | raw_stream"),
    output: Optional[str] = typer.Option(None, "--output", "-o", help="Output directory"),
    frames: Optional[int] = typer.Option(None, "--frames", help="Frames to sample (default 100)"),
    clip_len: Optional[int] = typer.Option(None, "--clip-len", help="Frames per clip m (default 10)"),
    clips_per_token: Optional[int] = typer.Option(None, "--clips-per-token", help="Clips sharing one <SEG> token"),
    patch: Optional[int] = typer.Option(None, "--patch", help="Patch size in pixels (default 16)"),
    keep_ratio: Optional[float] = typer.Option(None, "--keep-ratio", help="Baseline keep ratio (default 0.25)"),
    kernel_a: Optional[float] = typer.Option(None, "--kernel-a", help="Cubic kernel parameter (default -0.5)"),
    method: Optional[str] = typer.Option(None, "--method", help="astc | avg_pool | max_pool | prune | merge"),
    threads: Optional[int] = typer.Option(None, "--threads", help="Worker threads, 0 = auto"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    config: Optional[str] = typer.Option(None, "--config", help="key=value config file"),
    scores: Optional[str] = typer.Option(None, "--scores", help="Score sidecar for --method prune"),
    png: bool = typer.Option(False, "--png", help="Also write PNG copies"),
):
    """Compress a video into anchors + composites and write svac_manifest.json"""
    run_config = build_run_config(
        {
            "input": input,
            "format": format,
            "output": output,
            "sample_target": frames,
            "clip_length": clip_len,
            "clips_per_token": clips_per_token,
            "patch_size": patch,
            "keep_ratio": keep_ratio,
            "kernel_a": kernel_a,
            "method": method,
            "threads": threads,
            "seed": seed,
        },
        config_file=config,
    )
    _echo_config(run_config)

    if run_config.method != "astc":
        _section(f"Baseline: {run_config.method}")
        summary = run_baseline(run_config, scores_path=scores)
        console.print(f"✓ {summary['sampled_frames']} frames: {summary['tokens_original']} → "
                      f"{summary['tokens_reduced']} tokens ({format_percent(summary['ratio'])})")
        console.print(f"✓ Wrote {summary['path']}")
        return

    _section("ASTC compression")
    summary = run_compress(run_config, png=png)
    manifest = summary["manifest"]
    console.print(f"✓ Sampled {summary['sampled_frames']} of {summary['source_frames']} frames")
    console.print(f"✓ {summary['clips']} clips → {summary['images']} images")
    if manifest.short_final_clip:
        console.print(f"⚠️  Final clip is short ({len(manifest.clips[-1].member_source_indices)} frames)")
    console.print(f"✓ <SEG> tokens: {manifest.seg_allocation.num_tokens} "
                  f"({manifest.seg_allocation.clips_per_token} clip(s) per token)")
    console.print(f"✓ Tokens {manifest.token_budget.tokens_original} → {manifest.token_budget.tokens_reduced} "
                  f"(ratio {summary['ratio'].numerator}/{summary['ratio'].denominator} = "
                  f"{format_percent(summary['ratio'])})")
    console.print(f"✓ Manifest: {summary['manifest_path']}")


@app.command()
@reports_errors
def plan(
    frames: int = typer.Option(SAMPLE_TARGET, "--frames", help="Sampled frames T"),
    clip_len: int = typer.Option(CLIP_LENGTH, "--clip-len", help="Frames per clip m"),
    tokens_per_frame: int = typer.Option(TOKENS_PER_FRAME, "--tokens-per-frame", "-s", help="Encoder tokens per frame"),
    clips_per_token: int = typer.Option(CLIPS_PER_TOKEN, "--clips-per-token"),
    layers: int = typer.Option(LAYERS, "--layers"),
    hidden_dim: int = typer.Option(HIDDEN_DIM, "--hidden-dim"),
    bytes_per_element: int = typer.Option(BYTES_PER_ELEMENT, "--bytes-per-element"),
    csv: Optional[str] = typer.Option(None, "--csv", help="Also export the table as CSV"),
):
    """Token budget and attention cost for the configured clip length and a sweep"""
    shape = ModelShape(layers=layers, hidden_dim=hidden_dim, bytes_per_element=bytes_per_element)
    table = plan_table(frames, clip_len, tokens_per_frame, shape)

    _section(f"Token budget: T={frames}, s={tokens_per_frame}")
    view = Table()
    for column in table.columns:
        view.add_column(column, justify="right")
    for row in table.itertuples(index=False):
        view.add_row(*(str(value) for value in row))
    console.print(view)
    console.print(f"flops ≈ {FLOPS_FORMULA}; kv bytes ≈ {KV_FORMULA} "
                  f"(layers={shape.layers}, hidden_dim={shape.hidden_dim}, bytes={shape.bytes_per_element})")

    reduced = int(table.iloc[0]["tokens_reduced"])
    status = "✓ fits" if fits_context(reduced) else "❌ exceeds"
    console.print(f"{status} the {MAX_SEQUENCE_LENGTH}-token context with {reduced} visual tokens")

    _section(f"Frame scaling at m={clip_len}")
    scaling = Table("frames", "tokens_original", "tokens_reduced", "ratio")
    for report in frames_sweep(FRAME_COUNTS, clip_len, tokens_per_frame):
        scaling.add_row(str(report.total_frames), str(report.tokens_original),
                        str(report.tokens_reduced), format_percent(report.ratio))
    console.print(scaling)

    num_clips = -(-frames // clip_len)
    _section(f"<SEG> granularity over {num_clips} clips")
    granularity = Table("clips_per_token", "num_tokens", "group_sizes")
    sweep = sorted(set(GRANULARITIES) | {clips_per_token}, reverse=True)
    for g, alloc in granularity_sweep(num_clips, sweep).items():
        granularity.add_row(str(g), str(alloc.num_tokens), str(alloc.group_sizes))
    console.print(granularity)

    if csv:
        write_plan_csv(table, csv)
        console.print(f"✓ Wrote {csv}")


@app.command()
@reports_errors
def compare(
    input: Optional[str] = typer.Option(None, "--input", "-i", help="Frames to compare on (synthetic if omitted)"),
    format: Optional[str] = typer.Option(None, "--format"),
    frames: int = typer.Option(COMPARE_FRAMES, "--frames", help="Frames to sample"),
    clip_len: int = typer.Option(COMPARE_CLIP_LENGTH, "--clip-len", help="ASTC frames per clip"),
    patch: Optional[int] = typer.Option(None, "--patch"),
    keep_ratio: Optional[float] = typer.Option(None, "--keep-ratio"),
    height: int = typer.Option(SYNTHETIC_SIZE, "--height", help="Synthetic frame height"),
    width: int = typer.Option(SYNTHETIC_SIZE, "--width", help="Synthetic frame width"),
    threads: Optional[int] = typer.Option(None, "--threads", help="Worker threads, 0 = auto"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    config: Optional[str] = typer.Option(None, "--config", help="key=value config file"),
):
    """Token counts of ASTC against the pooling/pruning/merging baselines"""
    run_config = build_run_config(
        {
            "input": input,
            "format": format,
            "sample_target": frames,
            "clip_length": clip_len,
            "patch_size": patch,
            "keep_ratio": keep_ratio,
            "threads": threads,
            "seed": seed,
        },
        config_file=config,
    )
    workers = run_config.resolved_threads()
    seq = _load_or_synthesize(input, run_config.format, run_config.sample_target, height, width,
                              run_config.seed, workers)
    sampled = sample_uniform(seq, run_config.sample_target)

    _section(f"Compression comparison on {len(sampled)} frames")
    view = Table("method", "tokens_original", "tokens_reduced", "ratio")
    for row in compare_methods(sampled, run_config.clip_length, run_config.patch_size, run_config.keep_ratio, workers):
        view.add_row(row["method"], str(row["tokens_original"]), str(row["tokens_reduced"]),
                     format_percent(row["ratio"]))
    console.print(view)


@app.command()
@reports_errors
def inspect(
    manifest: str = typer.Argument(..., help="Manifest file or output directory"),
    clip: int = typer.Option(0, "--clip", "-c", help="Clip index"),
    output: Optional[str] = typer.Option(None, "--output", "-o", help="Preview path (PPM)"),
):
    """Re-emit a clip's pre-resize aggregate with grid lines burned in"""
    target = inspect_clip(manifest, clip, output)
    console.print(f"✓ Wrote {target}")


@app.command(name="bench")
@reports_errors
def bench_command(
    input: Optional[str] = typer.Option(None, "--input", "-i", help="Frames to time (synthetic if omitted)"),
    format: Optional[str] = typer.Option(None, "--format"),
    frames: int = typer.Option(BENCH_FRAMES, "--frames", help="Synthetic frame count"),
    height: int = typer.Option(SYNTHETIC_SIZE, "--height"),
    width: int = typer.Option(SYNTHETIC_SIZE, "--width"),
    clip_len: Optional[int] = typer.Option(None, "--clip-len", help="Frames per clip m (default 10)"),
    patch: Optional[int] = typer.Option(None, "--patch"),
    keep_ratio: Optional[float] = typer.Option(None, "--keep-ratio"),
    kernel_a: Optional[float] = typer.Option(None, "--kernel-a", help="Cubic kernel parameter (default -0.5)"),
    threads: Optional[int] = typer.Option(None, "--threads", help="Worker threads, 0 = auto"),
    repeats: int = typer.Option(BENCH_REPEATS, "--repeats", help="Runs per method (at least 5)"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    config: Optional[str] = typer.Option(None, "--config", help="key=value config file"),
):
    """Median throughput of compress and each baseline"""
    if frames < 1 and not input:
        raise EmptyInput("bench needs at least one frame")
    run_config = build_run_config(
        {
            "input": input,
            "format": format,
            "clip_length": clip_len,
            "patch_size": patch,
            "keep_ratio": keep_ratio,
            "kernel_a": kernel_a,
            "threads": threads,
            "seed": seed,
        },
        config_file=config,
    )
    workers = run_config.resolved_threads()
    seq = _load_or_synthesize(input, run_config.format, frames, height, width, run_config.seed, workers)

    _section(f"Benchmark: {len(seq)} frames {seq.height}x{seq.width}, kernel a={run_config.kernel_a}")
    report = bench(seq, run_config.clip_length, run_config.patch_size, run_config.keep_ratio,
                   workers, repeats, run_config.kernel_a)

    view = Table("method", "threads", "median s", "frames/s")
    for row in report["rows"]:
        view.add_row(row["method"], str(row["threads"]), f"{row['seconds']:.4f}", f"{row['fps']:.1f}")
    console.print(view)
    console.print(f"Speedup at {workers} threads: {report['speedup']:.2f}x (median of {report['repeats']} runs)")

    if not report["deterministic"]:
        typer.echo("error: Nondeterministic outputs differ between 1 and "
                   f"{workers} threads", err=True)
        raise typer.Exit(code=1)
    console.print(f"✓ Outputs identical across thread counts (sha256 {report['digest'][:16]})")


@app.command()
@reports_errors
def schema(output: Optional[str] = typer.Option(None, "--output", "-o", help="Write to file instead of stdout")):
    """JSON schema of svac_manifest.json"""
    text = manifest_schema_text()
    if output:
        Path(output).write_text(text, encoding="utf-8")
        console.print(f"✓ Wrote {output}")
    else:
        typer.echo(text, nl=False)
