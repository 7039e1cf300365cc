"""Segmentation and normalization of pen recordings."""

from .windowing import (
    DEFAULT_NUM_SEGMENTS,
    DEFAULT_WINDOW_LEN,
    window_starts,
    segment_session,
    segment_cohort,
    stack_windows,
)
from .normalization import (
    fit_channel_stats,
    normalize,
    denormalize,
    normalize_windows,
)

__all__ = [
    "DEFAULT_NUM_SEGMENTS",
    "DEFAULT_WINDOW_LEN",
    "window_starts",
    "segment_session",
    "segment_cohort",
    "stack_windows",
    "fit_channel_stats",
    "normalize",
    "denormalize",
    "normalize_windows",
]
