"""Utility functions and helpers."""

from .logger import setup_logging
from .errors import (
    SemsError,
    ConfigError,
    DataError,
    SessionTooShortError,
    ShapeError,
    TrainingError,
)
from .seeding import derive_seed, make_rng
from .io import (
    write_text_atomic,
    write_csv_atomic,
    write_json_atomic,
    format_float,
    sha256_file,
)

__all__ = [
    "setup_logging",
    "SemsError",
    "ConfigError",
    "DataError",
    "SessionTooShortError",
    "ShapeError",
    "TrainingError",
    "derive_seed",
    "make_rng",
    "write_text_atomic",
    "write_csv_atomic",
    "write_json_atomic",
    "format_float",
    "sha256_file",
]
