"""Exception types shared across the scoring engine."""

from typing import Optional


class SemsError(Exception):
    """Base class for all errors raised by the scoring engine."""

    kind = "error"


class ConfigError(SemsError, ValueError):
    """Invalid configuration value."""

    kind = "config"

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class DataError(SemsError, ValueError):
    """Malformed input data or a violated data precondition."""

    kind = "data"

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line: Optional[int] = None,
    ):
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line = line


class SessionTooShortError(DataError):
    """Session has fewer frames than one window."""

    def __init__(self, frames: int, window_len: int, child_id: str = ""):
        who = f"session {child_id!r} " if child_id else "session "
        super().__init__(
            f"{who}has {frames} frames, need at least {window_len}"
        )
        self.frames = frames
        self.window_len = window_len


class ShapeError(SemsError, ValueError):
    """Array dimensions do not match the model."""

    kind = "training"


class TrainingError(SemsError):
    """Failure inside a training stage."""

    kind = "training"

    def __init__(self, message: str, stage: str = ""):
        super().__init__(f"[{stage}] {message}" if stage else message)
        self.stage = stage
