"""
Token-budget accounting and a rough attention/KV-cache cost estimator.

The estimator is an order-of-magnitude model, not a benchmark:
    prefill attention flops = 2 * layers * n^2 * hidden_dim
    kv cache bytes          = 2 * layers * n * hidden_dim * bytes_per_element
"""

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from src.config import BYTES_PER_ELEMENT, HIDDEN_DIM, LAYERS, MAX_SEQUENCE_LENGTH
from src.errors import InvalidArgument, IoFailure

FLOPS_FORMULA = "2 * layers * n^2 * hidden_dim"
KV_FORMULA = "2 * layers * n * hidden_dim * bytes_per_element"

PLAN_SWEEP = (2, 4, 5, 8, 10, 20)
PLAN_COLUMNS = ["m", "tokens_original", "tokens_reduced", "ratio", "flops_ratio", "kv_ratio", "realized_ratio"]


@dataclass(frozen=True)
class ModelShape:
    layers: int = LAYERS
    hidden_dim: int = HIDDEN_DIM
    bytes_per_element: int = BYTES_PER_ELEMENT

    def __post_init__(self):
        if min(self.layers, self.hidden_dim, self.bytes_per_element) < 1:
            raise InvalidArgument(f"model shape values must be positive, got {self}")


@dataclass(frozen=True)
class AttentionCost:
    flops: int
    kv_cache_bytes: int


@dataclass(frozen=True)
class CostReport:
    s_per_frame: int
    clip_length: int
    total_frames: int
    tokens_original: int
    tokens_reduced: int
    full_clips: int
    short_clip_length: int  # 0 when T is a multiple of m
    attention_flops_original: Optional[int] = None
    attention_flops_reduced: Optional[int] = None
    kv_cache_bytes_original: Optional[int] = None
    kv_cache_bytes_reduced: Optional[int] = None

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.tokens_reduced, self.tokens_original)

    @property
    def full_clip_ratio(self) -> Fraction:
        """The 2/m headline figure, independent of any short trailing clip"""
        return Fraction(2, self.clip_length)

    @property
    def flops_ratio(self) -> Optional[Fraction]:
        if self.attention_flops_original is None:
            return None
        return Fraction(self.attention_flops_reduced, self.attention_flops_original)

    @property
    def kv_ratio(self) -> Optional[Fraction]:
        if self.kv_cache_bytes_original is None:
            return None
        return Fraction(self.kv_cache_bytes_reduced, self.kv_cache_bytes_original)


def clip_token_counts(length: int, s: int) -> Tuple[int, int]:
    """(original, reduced) tokens for one clip of the given length"""
    return length * s, (s if length == 1 else 2 * s)


def token_budget(T: int, m: int, s: int) -> CostReport:
    if T < 1 or m < 2 or s < 1:
        raise InvalidArgument(f"token_budget needs T >= 1, m >= 2, s >= 1 (got T={T}, m={m}, s={s})")

    full_clips, short = divmod(T, m)
    original = full_clips * m * s
    reduced = full_clips * 2 * s
    if short:
        short_original, short_reduced = clip_token_counts(short, s)
        original += short_original
        reduced += short_reduced

    return CostReport(
        s_per_frame=s,
        clip_length=m,
        total_frames=T,
        tokens_original=original,
        tokens_reduced=reduced,
        full_clips=full_clips,
        short_clip_length=short,
    )


def attention_cost(n_tokens: int, shape: ModelShape = ModelShape()) -> AttentionCost:
    if n_tokens < 1:
        raise InvalidArgument(f"n_tokens must be >= 1, got {n_tokens}")
    return AttentionCost(
        flops=2 * shape.layers * n_tokens * n_tokens * shape.hidden_dim,
        kv_cache_bytes=2 * shape.layers * n_tokens * shape.hidden_dim * shape.bytes_per_element,
    )


def costed_budget(T: int, m: int, s: int, shape: ModelShape = ModelShape()) -> CostReport:
    """token_budget with the attention/KV estimates filled in"""
    report = token_budget(T, m, s)
    original = attention_cost(report.tokens_original, shape)
    reduced = attention_cost(report.tokens_reduced, shape)
    return replace(
        report,
        attention_flops_original=original.flops,
        attention_flops_reduced=reduced.flops,
        kv_cache_bytes_original=original.kv_cache_bytes,
        kv_cache_bytes_reduced=reduced.kv_cache_bytes,
    )


def fits_context(n_tokens: int, max_len: int = MAX_SEQUENCE_LENGTH) -> bool:
    return n_tokens <= max_len


def frames_sweep(frame_counts: Sequence[int], m: int, s: int) -> List[CostReport]:
    """Budget at each sampled-frame count for a fixed clip length"""
    return [token_budget(T, m, s) for T in frame_counts]


def format_percent(ratio: Fraction) -> str:
    return f"{float(ratio) * 100:.2f}%"


def plan_row(report: CostReport) -> Dict[str, object]:
    return {
        "m": report.clip_length,
        "tokens_original": report.tokens_original,
        "tokens_reduced": report.tokens_reduced,
        "ratio": format_percent(report.full_clip_ratio),
        "flops_ratio": f"{float(report.flops_ratio):.6f}",
        "kv_ratio": f"{float(report.kv_ratio):.6f}",
        "realized_ratio": format_percent(report.ratio),
    }


def plan_table(
    T: int,
    m: int,
    s: int,
    shape: ModelShape = ModelShape(),
    sweep: Sequence[int] = PLAN_SWEEP,
) -> pd.DataFrame:
    """Configured clip length first, then the sweep (duplicates dropped)"""
    lengths = [m] + [value for value in sweep if value != m]
    rows = [plan_row(costed_budget(T, length, s, shape)) for length in lengths]
    return pd.DataFrame(rows, columns=PLAN_COLUMNS)


def write_plan_csv(table: pd.DataFrame, path) -> None:
    try:
        table.to_csv(path, index=False)
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e.strerror or e}") from e
