import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from rich.console import Console
from rich.logging import RichHandler

from src.errors import ConfigError

# Load environment variables
load_dotenv()

# Sampling / clip configuration
SAMPLE_TARGET = 100  # Frames sampled per video
CLIP_LENGTH = 10  # Frames per clip (m)
CLIPS_PER_TOKEN = 1  # <SEG> granularity (g)
COMPARE_FRAMES = 80
COMPARE_CLIP_LENGTH = 8

# Token configuration
TOKENS_PER_FRAME = 256  # Encoder tokens per frame when planning
PATCH_SIZE = 16
KEEP_RATIO = 0.25
POOL_KERNEL = 2
POOL_STRIDE = 2

# Resampling configuration
KERNEL_A = float(os.getenv("SVAC_KERNEL_A", "-0.5"))  # Catmull-Rom

# Run configuration
METHOD = "astc"
METHODS = ("astc", "avg_pool", "max_pool", "prune", "merge")
THREADS = 0  # 0 = auto
SEED = 0
BENCH_FRAMES = 100
BENCH_REPEATS = 5
SYNTHETIC_SIZE = 128

# Manifest configuration
MANIFEST_NAME = "svac_manifest.json"
MANIFEST_VERSION = 1

# Cost model configuration (order-of-magnitude estimator only)
LAYERS = 28
HIDDEN_DIM = 3584
BYTES_PER_ELEMENT = 2  # bf16
MAX_SEQUENCE_LENGTH = 12288

# Logging
LOG_LEVEL = os.getenv("SVAC_LOG_LEVEL", "INFO")

# Environment fallbacks, below flags and config files
ENV_KEYS = {
    "threads": "SVAC_THREADS",
    "kernel_a": "SVAC_KERNEL_A",
}

# Keys accepted in a key=value config file
CONFIG_FILE_KEYS = {
    "input": "input",
    "format": "format",
    "output": "output",
    "frames": "sample_target",
    "clip_len": "clip_length",
    "clips_per_token": "clips_per_token",
    "patch": "patch_size",
    "keep_ratio": "keep_ratio",
    "kernel_a": "kernel_a",
    "resample.kernel_a": "kernel_a",
    "method": "method",
    "threads": "threads",
    "seed": "seed",
}


def setup_logging(level: str = LOG_LEVEL):
    """Route library logging through rich, on stderr so stdout stays clean"""
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False, markup=False)],
        force=True,
    )


class RunConfig(BaseModel):
    """Every knob of a run, with the defaults above"""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    input: Optional[str] = None
    format: str = "ppm_dir"
    output: Optional[str] = None
    sample_target: int = Field(default=SAMPLE_TARGET, ge=1)
    clip_length: int = Field(default=CLIP_LENGTH, ge=2)
    clips_per_token: int = Field(default=CLIPS_PER_TOKEN, ge=1)
    patch_size: int = Field(default=PATCH_SIZE, ge=1)
    keep_ratio: float = Field(default=KEEP_RATIO, gt=0.0, le=1.0)
    kernel_a: float = KERNEL_A
    method: str = METHOD
    threads: int = Field(default=THREADS, ge=0)
    seed: int = SEED

    @field_validator("format")
    @classmethod
    def _known_format(cls, value: str) -> str:
        if value not in ("ppm_dir", "raw_stream"):
            raise ValueError(f"unknown input format '{value}' (expected ppm_dir or raw_stream)")
        return value

    @field_validator("method")
    @classmethod
    def _known_method(cls, value: str) -> str:
        if value not in METHODS:
            raise ValueError(f"unknown method '{value}' (expected one of {', '.join(METHODS)})")
        return value

    def resolved_threads(self) -> int:
        """Worker count with 0 meaning one per CPU"""
        return self.threads or (os.cpu_count() or 1)


def load_config_file(path: str) -> Dict[str, Any]:
    """Parse a key=value config file into RunConfig field names"""
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"config file not found: {path}")

    values = {}
    for key, value in dotenv_values(config_path).items():
        field = CONFIG_FILE_KEYS.get(key.strip().lower())
        if field is None:
            raise ConfigError(f"unknown config key '{key}' in {path}")
        if value is not None:
            values[field] = value.strip()
    return values


def build_run_config(
    overrides: Dict[str, Any],
    config_file: Optional[str] = None,
) -> RunConfig:
    """Merge flags > config file > SVAC_* environment > defaults"""
    values: Dict[str, Any] = {}

    for field, variable in ENV_KEYS.items():
        env_value = os.getenv(variable)
        if env_value:
            values[field] = env_value

    if config_file:
        values.update(load_config_file(config_file))

    values.update({key: value for key, value in overrides.items() if value is not None})

    try:
        return RunConfig.model_validate(values)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(problems) from None
