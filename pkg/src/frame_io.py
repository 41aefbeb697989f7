"""
Frame decoding/encoding (binary PPM and SVACRAW1 streams) and uniform temporal sampling
"""

import logging
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from PIL import Image

from src.errors import (
    DimensionMismatch,
    EmptyInput,
    InvalidArgument,
    IoFailure,
    MalformedHeader,
    MissingPath,
    TruncatedData,
)

logger = logging.getLogger(__name__)

RAW_MAGIC = b"SVACRAW1"
RAW_HEADER = struct.Struct("<8sIII")  # magic, height, width, frame count
PPM_MAXVAL = 255

PathLike = Union[str, Path]


@dataclass(frozen=True, eq=False)
class Frame:
    """One RGB8 frame, pixels held as a read-only (H, W, 3) uint8 array"""

    data: np.ndarray
    source_index: int = 0

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.dtype != np.uint8 or data.ndim != 3 or data.shape[2] != 3:
            raise InvalidArgument(f"frame data must be (H, W, 3) uint8, got {data.shape} {data.dtype}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise InvalidArgument(f"frame must be at least 1x1, got {data.shape[0]}x{data.shape[1]}")
        if self.source_index < 0:
            raise InvalidArgument(f"source_index must be >= 0, got {self.source_index}")
        if data.flags.writeable:
            data = data.copy()
            data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width

    def tobytes(self) -> bytes:
        return self.data.tobytes()

    def same_pixels(self, other: "Frame") -> bool:
        """Byte-exact pixel comparison"""
        return self.shape == other.shape and np.array_equal(self.data, other.data)

    def with_index(self, source_index: int) -> "Frame":
        return Frame(self.data, source_index)


@dataclass(frozen=True)
class FrameSequence:
    """Ordered frames of uniform size; fps_hint is metadata only"""

    frames: Tuple[Frame, ...] = field(default_factory=tuple)
    fps_hint: Optional[float] = None

    def __post_init__(self):
        frames = tuple(self.frames)
        object.__setattr__(self, "frames", frames)
        if not frames:
            return

        height, width = frames[0].shape
        for frame in frames[1:]:
            if frame.shape != (height, width):
                raise DimensionMismatch(
                    f"frame {frame.source_index} is {frame.height}x{frame.width}, "
                    f"expected {height}x{width}"
                )
        indices = [frame.source_index for frame in frames]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise InvalidArgument("source_index values must be strictly increasing")

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, position: int) -> Frame:
        return self.frames[position]

    def __iter__(self):
        return iter(self.frames)

    @property
    def height(self) -> int:
        return self.frames[0].height if self.frames else 0

    @property
    def width(self) -> int:
        return self.frames[0].width if self.frames else 0

    @property
    def source_indices(self) -> List[int]:
        return [frame.source_index for frame in self.frames]


# ---------------------------------------------------------------------------
# PPM (P6, maxval 255)
# ---------------------------------------------------------------------------

def _read_ppm_header(blob: bytes, name: str) -> Tuple[int, int, int]:
    """Parse "P6 <w> <h> 255" and return (width, height, payload offset)"""
    if blob[:2] != b"P6":
        raise MalformedHeader(f"{name}: bad magic {blob[:2]!r}, expected b'P6'")

    tokens = []
    pos = 2
    while len(tokens) < 3:
        # whitespace and comments between header fields
        while pos < len(blob) and blob[pos:pos + 1].isspace():
            pos += 1
        if pos < len(blob) and blob[pos:pos + 1] == b"#":
            while pos < len(blob) and blob[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(blob) and blob[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise MalformedHeader(f"{name}: truncated or non-numeric PPM header")
        tokens.append(int(blob[start:pos]))

    # exactly one whitespace byte separates maxval from the payload
    if pos >= len(blob) or not blob[pos:pos + 1].isspace():
        raise MalformedHeader(f"{name}: missing whitespace after maxval")
    pos += 1

    width, height, maxval = tokens
    if maxval != PPM_MAXVAL:
        raise MalformedHeader(f"{name}: maxval {maxval} not supported (only 255)")
    if width < 1 or height < 1:
        raise MalformedHeader(f"{name}: invalid dimensions {width}x{height}")
    return width, height, pos


def decode_ppm(blob: bytes, source_index: int = 0, name: str = "<ppm>") -> Frame:
    """Decode one binary PPM image"""
    width, height, offset = _read_ppm_header(blob, name)
    expected = width * height * 3
    payload = blob[offset:offset + expected]
    if len(payload) < expected:
        raise TruncatedData(f"{name}: expected {expected} payload bytes, found {len(payload)}")
    data = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return Frame(data, source_index)


def encode_ppm(frame: Frame) -> bytes:
    header = f"P6\n{frame.width} {frame.height}\n{PPM_MAXVAL}\n".encode("ascii")
    return header + frame.tobytes()


def _ppm_frame_index(path: Path) -> Optional[int]:
    return int(path.stem) if path.stem.isdigit() else None


def _load_ppm_dir(directory: Path, threads: int) -> List[Frame]:
    entries = []
    for path in directory.iterdir():
        if path.suffix.lower() != ".ppm" or not path.is_file():
            continue
        number = _ppm_frame_index(path)
        if number is None:
            logger.warning("Skipping non-numeric frame file %s", path.name)
            continue
        entries.append((number, path))
    entries.sort()

    def _decode(item: Tuple[int, Tuple[int, Path]]) -> Frame:
        position, (_, path) = item
        return decode_ppm(path.read_bytes(), source_index=position, name=path.name)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        return list(pool.map(_decode, enumerate(entries)))


# ---------------------------------------------------------------------------
# SVACRAW1 stream
# ---------------------------------------------------------------------------

def decode_raw_stream(blob: bytes, name: str = "<raw>") -> List[Frame]:
    """Decode every frame of a SVACRAW1 stream"""
    magic = bytes(blob[:len(RAW_MAGIC)])
    if magic != RAW_MAGIC:
        raise MalformedHeader(f"{name}: bad magic {magic!r}, expected {RAW_MAGIC!r}")
    if len(blob) < RAW_HEADER.size:
        raise TruncatedData(f"{name}: {len(blob)} bytes is shorter than the {RAW_HEADER.size}-byte header")

    _, height, width, count = RAW_HEADER.unpack_from(blob)
    if count and (height < 1 or width < 1):
        raise MalformedHeader(f"{name}: invalid dimensions {height}x{width}")

    frame_bytes = height * width * 3
    payload = memoryview(blob)[RAW_HEADER.size:]
    if len(payload) < count * frame_bytes:
        raise TruncatedData(
            f"{name}: header promises {count} frames ({count * frame_bytes} bytes), "
            f"payload has {len(payload)}"
        )
    if len(payload) > count * frame_bytes:
        raise MalformedHeader(f"{name}: {len(payload) - count * frame_bytes} trailing bytes after last frame")

    frames = np.frombuffer(payload, dtype=np.uint8, count=count * frame_bytes)
    frames = frames.reshape(count, height, width, 3)
    return [Frame(frames[t], source_index=t) for t in range(count)]


def encode_raw_stream(frames: List[Frame]) -> bytes:
    if not frames:
        raise EmptyInput("cannot encode an empty raw stream")
    height, width = frames[0].shape
    for frame in frames:
        if frame.shape != (height, width):
            raise DimensionMismatch(f"frame is {frame.height}x{frame.width}, expected {height}x{width}")
    header = RAW_HEADER.pack(RAW_MAGIC, height, width, len(frames))
    return header + b"".join(frame.tobytes() for frame in frames)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def load_sequence(path: PathLike, format: str = "ppm_dir", threads: int = 1) -> FrameSequence:
    """Load a frame sequence; source_index is the frame's position"""
    source = Path(path)
    if not source.exists():
        raise MissingPath(f"{source} does not exist")

    if format == "ppm_dir":
        if not source.is_dir():
            raise MalformedHeader(f"{source} is not a directory of PPM frames")
        frames = _load_ppm_dir(source, threads)
    elif format == "raw_stream":
        if not source.is_file():
            raise MalformedHeader(f"{source} is not a raw stream file")
        frames = decode_raw_stream(source.read_bytes(), name=source.name)
    else:
        raise InvalidArgument(f"unknown format '{format}' (expected ppm_dir or raw_stream)")

    if not frames:
        raise EmptyInput(f"{source} contains no frames")

    logger.info("Loaded %d frames (%dx%d) from %s", len(frames), frames[0].height, frames[0].width, source)
    return FrameSequence(tuple(frames))


def sample_uniform(seq: FrameSequence, target: int) -> FrameSequence:
    """Keep frames at floor(i*T/target); sequences no longer than target pass through"""
    if target < 1:
        raise InvalidArgument(f"sample target must be >= 1, got {target}")

    total = len(seq)
    if total <= target:
        return seq

    positions = [(i * total) // target for i in range(target)]
    return FrameSequence(tuple(seq.frames[p] for p in positions), fps_hint=seq.fps_hint)


def write_frame(frame: Frame, path: PathLike, format: str = "ppm") -> Path:
    """Write one frame as P6 PPM or as a single-frame SVACRAW1 stream"""
    target = Path(path)
    if format == "ppm":
        blob = encode_ppm(frame)
    elif format == "raw_stream_single":
        blob = encode_raw_stream([frame])
    else:
        raise InvalidArgument(f"unknown frame format '{format}' (expected ppm or raw_stream_single)")

    try:
        target.write_bytes(blob)
    except OSError as e:
        raise IoFailure(f"cannot write {target}: {e.strerror or e}") from e
    return target


def write_sequence(seq: FrameSequence, path: PathLike) -> Path:
    """Write a whole sequence as one SVACRAW1 stream"""
    target = Path(path)
    try:
        target.write_bytes(encode_raw_stream(list(seq.frames)))
    except OSError as e:
        raise IoFailure(f"cannot write {target}: {e.strerror or e}") from e
    return target


def load_frame(path: PathLike, format: str = "ppm") -> Frame:
    """Read back a single frame written by write_frame"""
    source = Path(path)
    if not source.is_file():
        raise MissingPath(f"{source} does not exist")
    if format == "ppm":
        return decode_ppm(source.read_bytes(), name=source.name)
    frames = decode_raw_stream(source.read_bytes(), name=source.name)
    if len(frames) != 1:
        raise MalformedHeader(f"{source.name}: expected 1 frame, found {len(frames)}")
    return frames[0]


def write_png(frame: Frame, path: PathLike) -> Path:
    """Optional PNG copy of a frame (not bit-exact contract output)"""
    target = Path(path)
    try:
        Image.fromarray(np.ascontiguousarray(frame.data)).save(target)
    except OSError as e:
        raise IoFailure(f"cannot write {target}: {e}") from e
    return target
