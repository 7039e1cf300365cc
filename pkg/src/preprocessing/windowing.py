"""Cut sessions into the fixed-length windows the network consumes."""

import logging
from typing import List, Sequence, Tuple

import numpy as np

from ..models import LabeledWindow, WritingSession
from ..utils.errors import ConfigError, SessionTooShortError

logger = logging.getLogger(__name__)

DEFAULT_NUM_SEGMENTS = 20
DEFAULT_WINDOW_LEN = 120


def window_starts(
    num_frames: int, num_segments: int, window_len: int
) -> List[int]:
    """Uniform start offsets spanning the session.

    Window k starts at floor(k * (T - n) / (num_segments - 1)).
    """
    if num_segments < 1 or window_len < 1:
        raise ConfigError(
            "num_segments and window_len must be positive", "num_segments"
        )
    if num_frames < window_len:
        raise SessionTooShortError(num_frames, window_len)
    if num_segments == 1:
        return [0]
    span = num_frames - window_len
    return [(k * span) // (num_segments - 1) for k in range(num_segments)]


def segment_session(
    session: WritingSession,
    num_segments: int = DEFAULT_NUM_SEGMENTS,
    window_len: int = DEFAULT_WINDOW_LEN,
) -> List[LabeledWindow]:
    """Cut a session into `num_segments` windows of `window_len` frames.

    Every window carries the session's label. Overlap happens whenever
    T < num_segments * window_len; a zero stride (T == window_len with
    more than one segment) repeats the same window and logs a warning.

    Raises:
        SessionTooShortError: session shorter than one window
    """
    try:
        starts = window_starts(session.num_frames, num_segments, window_len)
    except SessionTooShortError:
        raise SessionTooShortError(
            session.num_frames, window_len, session.child_id
        ) from None

    if num_segments > 1 and starts[1] == starts[0]:
        logger.warning(
            f"Session {session.child_id!r}: {session.num_frames} frames give "
            f"duplicate windows for {num_segments} segments of {window_len}"
        )

    return [
        LabeledWindow(
            values=session.values[start : start + window_len].copy(),
            sems_label=float(session.sems_label),
            source_child=session.child_id,
            start=start,
        )
        for start in starts
    ]


def segment_cohort(
    sessions: Sequence[WritingSession],
    num_segments: int = DEFAULT_NUM_SEGMENTS,
    window_len: int = DEFAULT_WINDOW_LEN,
) -> List[LabeledWindow]:
    """Segment every session, keeping cohort order."""
    windows: List[LabeledWindow] = []
    for session in sessions:
        windows.extend(segment_session(session, num_segments, window_len))
    return windows


def stack_windows(
    windows: Sequence[LabeledWindow],
) -> Tuple[np.ndarray, np.ndarray]:
    """Stack windows into X (B, n, 10) and y (B,)."""
    X = np.stack([w.values for w in windows]).astype(np.float64, copy=False)
    y = np.array([w.sems_label for w in windows], dtype=np.float64)
    return X, y
