"""
Patch tokens and the baseline token compressors (average/max pooling, pruning, merging)
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.config import KEEP_RATIO, POOL_KERNEL, POOL_STRIDE
from src.errors import (
    InvalidArgument,
    MalformedHeader,
    MissingPath,
    NonDivisibleDimensions,
    ScoreCountMismatch,
    WindowLargerThanGrid,
)
from src.frame_io import Frame


@dataclass(frozen=True, eq=False)
class TokenGrid:
    """grid_h x grid_w token vectors, values shaped (grid_h, grid_w, dim)"""

    values: np.ndarray
    patch_size: int = 1

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 2:
            values = values[:, :, np.newaxis]
        if values.ndim != 3:
            raise InvalidArgument(f"token values must be (grid_h, grid_w, dim), got shape {values.shape}")
        object.__setattr__(self, "values", values)

    @property
    def grid_h(self) -> int:
        return self.values.shape[0]

    @property
    def grid_w(self) -> int:
        return self.values.shape[1]

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    @property
    def count(self) -> int:
        return self.grid_h * self.grid_w

    def flat(self) -> np.ndarray:
        """(count, dim) view in row-major token order"""
        return self.values.reshape(self.count, self.dim)


@dataclass(frozen=True, eq=False)
class TokenSet:
    """Surviving tokens keyed by original row-major index, strictly increasing"""

    indices: Tuple[int, ...]
    vectors: np.ndarray

    @property
    def kept_count(self) -> int:
        return len(self.indices)

    @property
    def tokens(self) -> List[Tuple[int, np.ndarray]]:
        return list(zip(self.indices, self.vectors))


def kept_count(s: int, keep_ratio: float) -> int:
    """round(keep_ratio * s), halves rounded up"""
    return int(np.floor(keep_ratio * s + 0.5))


def patch_tokenize(frame: Frame, patch: int) -> TokenGrid:
    if patch < 1:
        raise InvalidArgument(f"patch size must be >= 1, got {patch}")
    if frame.height % patch or frame.width % patch:
        raise NonDivisibleDimensions(f"patch {patch} does not divide {frame.height}x{frame.width}")

    grid_h, grid_w = frame.height // patch, frame.width // patch
    patches = frame.data.reshape(grid_h, patch, grid_w, patch, 3).transpose(0, 2, 1, 3, 4)
    values = patches.reshape(grid_h, grid_w, patch * patch * 3).astype(np.float64) / 255.0
    return TokenGrid(values=values, patch_size=patch)


def _pool_windows(grid: TokenGrid, k: int, stride: int) -> np.ndarray:
    if k < 1 or stride < 1:
        raise InvalidArgument(f"window and stride must be >= 1, got k={k} stride={stride}")
    if k > grid.grid_h or k > grid.grid_w:
        raise WindowLargerThanGrid(f"{k}x{k} window does not fit a {grid.grid_h}x{grid.grid_w} grid")
    windows = sliding_window_view(grid.values, (k, k), axis=(0, 1))
    # (out_h, out_w, dim, k, k)
    return windows[::stride, ::stride]


def avg_pool_tokens(grid: TokenGrid, k: int = POOL_KERNEL, stride: int = POOL_STRIDE) -> TokenGrid:
    pooled = _pool_windows(grid, k, stride).mean(axis=(-2, -1))
    return TokenGrid(values=pooled, patch_size=grid.patch_size * stride)


def max_pool_tokens(grid: TokenGrid, k: int = POOL_KERNEL, stride: int = POOL_STRIDE) -> TokenGrid:
    pooled = _pool_windows(grid, k, stride).max(axis=(-2, -1))
    return TokenGrid(values=pooled, patch_size=grid.patch_size * stride)


def saliency_scores(grid: TokenGrid) -> np.ndarray:
    """Variance of each token's components, a stand-in for attention-to-CLS"""
    return grid.flat().var(axis=1)


def prune_tokens(grid: TokenGrid, scores: Sequence[float], keep_ratio: float = KEEP_RATIO) -> TokenSet:
    """Keep the highest-scoring tokens; ties go to the lower index"""
    if not 0.0 < keep_ratio <= 1.0:
        raise InvalidArgument(f"keep_ratio must be in (0, 1], got {keep_ratio}")
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if scores.size != grid.count:
        raise ScoreCountMismatch(f"{scores.size} scores for {grid.count} tokens")

    keep = kept_count(grid.count, keep_ratio)
    order = np.lexsort((np.arange(grid.count), -scores))
    kept = np.sort(order[:keep])
    return TokenSet(indices=tuple(int(i) for i in kept), vectors=grid.flat()[kept].copy())


def merge_destinations(s: int, d: int) -> np.ndarray:
    return (np.arange(d) * s) // d


def cosine_similarity(sources: np.ndarray, destinations: np.ndarray) -> np.ndarray:
    """(n_src, n_dst) cosine similarities; zero vectors score 0 against everything"""
    src_norm = np.linalg.norm(sources, axis=1)
    dst_norm = np.linalg.norm(destinations, axis=1)
    dots = sources @ destinations.T
    denom = np.outer(src_norm, dst_norm)
    with np.errstate(divide="ignore", invalid="ignore"):
        sims = np.where(denom > 0, dots / np.where(denom > 0, denom, 1.0), 0.0)
    return sims


def merge_tokens(grid: TokenGrid, keep_ratio: float = KEEP_RATIO) -> TokenSet:
    """Uniformly sampled destinations absorb every other token by cosine similarity"""
    if not 0.0 < keep_ratio <= 1.0:
        raise InvalidArgument(f"keep_ratio must be in (0, 1], got {keep_ratio}")
    s = grid.count
    d = kept_count(s, keep_ratio)
    if d < 1:
        raise InvalidArgument(f"keep_ratio {keep_ratio} keeps no tokens out of {s}")

    tokens = grid.flat()
    destinations = merge_destinations(s, d)
    is_destination = np.zeros(s, dtype=bool)
    is_destination[destinations] = True
    sources = np.flatnonzero(~is_destination)

    sums = tokens[destinations].copy()
    counts = np.ones(d, dtype=np.int64)
    if sources.size:
        assignment = cosine_similarity(tokens[sources], tokens[destinations]).argmax(axis=1)
        np.add.at(sums, assignment, tokens[sources])
        np.add.at(counts, assignment, 1)

    merged = sums / counts[:, np.newaxis]
    return TokenSet(indices=tuple(int(i) for i in destinations), vectors=merged)


def load_scores(path: Union[str, Path]) -> np.ndarray:
    """Score sidecar: one decimal per line, token-index order"""
    source = Path(path)
    if not source.is_file():
        raise MissingPath(f"{source} does not exist")
    values = []
    for line_no, line in enumerate(source.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise MalformedHeader(f"{source.name}:{line_no}: '{line}' is not a number") from None
    return np.asarray(values, dtype=np.float64)


def compress_frame_tokens(
    grid: TokenGrid,
    method: str,
    keep_ratio: float = KEEP_RATIO,
    scores: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """Run one baseline on a frame's tokens; returns the surviving (n, dim) vectors"""
    if method == "avg_pool":
        return avg_pool_tokens(grid).flat()
    if method == "max_pool":
        return max_pool_tokens(grid).flat()
    if method == "prune":
        return prune_tokens(grid, saliency_scores(grid) if scores is None else scores, keep_ratio).vectors
    if method == "merge":
        return merge_tokens(grid, keep_ratio).vectors
    raise InvalidArgument(f"'{method}' is not a token-level baseline")


BASELINES: Tuple[str, ...] = ("avg_pool", "max_pool", "prune", "merge")


def baseline_token_count(method: str, grid_h: int, grid_w: int, keep_ratio: float = KEEP_RATIO) -> int:
    """Tokens one frame keeps under a baseline, without materialising them"""
    if method in ("avg_pool", "max_pool"):
        out_h = (grid_h - POOL_KERNEL) // POOL_STRIDE + 1
        out_w = (grid_w - POOL_KERNEL) // POOL_STRIDE + 1
        return out_h * out_w
    if method in ("prune", "merge"):
        return kept_count(grid_h * grid_w, keep_ratio)
    raise InvalidArgument(f"'{method}' is not a token-level baseline")


def astc_token_count(clip_lengths: Sequence[int], s: int) -> int:
    """Anchor plus composite per clip, anchor only for single-frame clips"""
    return sum(s if length == 1 else 2 * s for length in clip_lengths)
