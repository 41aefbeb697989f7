"""
Separable bicubic (cubic convolution) resampling.

Convention, recorded in every manifest so composites can be reproduced byte for byte:
  - kernel: cubic convolution with parameter a (default -0.5, Catmull-Rom)
  - coordinates: half-pixel centres, src = (dst + 0.5) * (src_len / dst_len) - 0.5
  - boundary: taps outside the image clamp to the nearest edge pixel
  - rounding: clamp to [0, 255] then round half away from zero, once, at the end
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Tuple

import numpy as np

from src.config import KERNEL_A
from src.errors import InvalidArgument
from src.frame_io import Frame

COORDINATE_CONVENTION = "half_pixel_center"
BOUNDARY = "clamp_to_edge"
ROUNDING = "round_half_away_from_zero"


@dataclass(frozen=True)
class ResampleSpec:
    kernel_a: float = KERNEL_A
    coordinate_convention: str = COORDINATE_CONVENTION
    boundary: str = BOUNDARY
    rounding: str = ROUNDING

    def as_record(self) -> Dict[str, str]:
        """Manifest form; kernel_a kept as decimal text"""
        return {
            "kernel_a": repr(float(self.kernel_a)),
            "coordinate_convention": self.coordinate_convention,
            "boundary": self.boundary,
            "rounding": self.rounding,
        }


def cubic_weight(x: float, a: float = KERNEL_A) -> float:
    x = abs(x)
    if x <= 1.0:
        return (a + 2.0) * x ** 3 - (a + 3.0) * x ** 2 + 1.0
    if x < 2.0:
        return a * x ** 3 - 5.0 * a * x ** 2 + 8.0 * a * x - 4.0 * a
    return 0.0


def _cubic_weights(x: np.ndarray, a: float) -> np.ndarray:
    x = np.abs(x)
    near = (a + 2.0) * x ** 3 - (a + 3.0) * x ** 2 + 1.0
    far = a * x ** 3 - 5.0 * a * x ** 2 + 8.0 * a * x - 4.0 * a
    return np.where(x <= 1.0, near, np.where(x < 2.0, far, 0.0))


def source_coordinate(dst: int, src_len: int, dst_len: int) -> float:
    return (dst + 0.5) * (src_len / dst_len) - 0.5


@lru_cache(maxsize=256)
def tap_table(src_len: int, dst_len: int, a: float = KERNEL_A) -> Tuple[np.ndarray, np.ndarray]:
    """(dst_len, 4) source indices (clamped to the edge) and their weights"""
    dst = np.arange(dst_len, dtype=np.float64)
    centre = (dst + 0.5) * (src_len / dst_len) - 0.5
    taps = np.floor(centre).astype(np.int64)[:, np.newaxis] + np.arange(-1, 3)
    weights = _cubic_weights(centre[:, np.newaxis] - taps, a)
    indices = np.clip(taps, 0, src_len - 1)
    indices.flags.writeable = False
    weights.flags.writeable = False
    return indices, weights


def _resample_axis(values: np.ndarray, indices: np.ndarray, weights: np.ndarray, axis: int) -> np.ndarray:
    out = None
    for k in range(indices.shape[1]):
        shape = [1] * values.ndim
        shape[axis] = indices.shape[0]
        term = np.take(values, indices[:, k], axis=axis) * weights[:, k].reshape(shape)
        out = term if out is None else out + term
    return out


def resize_float(image: np.ndarray, out_h: int, out_w: int, a: float = KERNEL_A) -> np.ndarray:
    """Unrounded float64 result: horizontal pass over rows, then vertical pass"""
    src = image.astype(np.float64)
    rows = _resample_axis(src, *tap_table(src.shape[1], out_w, a), axis=1)
    return _resample_axis(rows, *tap_table(src.shape[0], out_h, a), axis=0)


def quantize(values: np.ndarray) -> np.ndarray:
    """Clamp to [0, 255], round half away from zero (values are non-negative after clamping)"""
    return np.floor(np.clip(values, 0.0, 255.0) + 0.5).astype(np.uint8)


def bicubic_resize(image: Frame, out_h: int, out_w: int, a: float = KERNEL_A) -> Frame:
    if out_h < 1 or out_w < 1:
        raise InvalidArgument(f"output size must be at least 1x1, got {out_h}x{out_w}")

    if image.shape == (out_h, out_w):
        return Frame(image.data.copy(), image.source_index)

    resized = quantize(resize_float(image.data, out_h, out_w, a))
    return Frame(resized, image.source_index)

