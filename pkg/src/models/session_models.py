"""Data models for pen recordings, children and fixed-length windows."""

from dataclasses import dataclass, field
from enum import IntEnum
from typing import List, Tuple

import numpy as np

from ..utils.errors import DataError

CHANNELS: Tuple[str, ...] = (
    "tip_pressure",
    "finger_pressure",
    "acc_x",
    "acc_y",
    "acc_z",
    "gyro_x",
    "gyro_y",
    "gyro_z",
    "angle",
    "writing_speed",
)
NUM_CHANNELS = len(CHANNELS)

# Channels that are physically non-negative.
NON_NEGATIVE_CHANNELS: Tuple[int, ...] = (
    CHANNELS.index("tip_pressure"),
    CHANNELS.index("finger_pressure"),
    CHANNELS.index("writing_speed"),
)


class Gender(IntEnum):
    """Gender as fed to the combiner."""

    FEMALE = 0
    MALE = 1

    @classmethod
    def from_literal(cls, literal: str) -> "Gender":
        """Parse the manifest literal `f` / `m`."""
        if literal == "f":
            return cls.FEMALE
        if literal == "m":
            return cls.MALE
        raise DataError(f"gender must be 'f' or 'm', got {literal!r}")

    @property
    def literal(self) -> str:
        return "f" if self is Gender.FEMALE else "m"


@dataclass(frozen=True)
class SensorFrame:
    """One timestamped sample of the 10 pen channels."""

    timestamp_ms: int
    tip_pressure: float
    finger_pressure: float
    acc_x: float
    acc_y: float
    acc_z: float
    gyro_x: float
    gyro_y: float
    gyro_z: float
    angle: float
    writing_speed: float

    @property
    def values(self) -> Tuple[float, ...]:
        """Channel values in CHANNELS order."""
        return tuple(getattr(self, name) for name in CHANNELS)


@dataclass(frozen=True)
class ChildMeta:
    """Per-child metadata consumed by the combiner."""

    child_id: str
    age_years: float
    gender: Gender

    def __post_init__(self):
        if not self.age_years > 0:
            raise DataError(
                f"age_years must be positive for child {self.child_id!r}"
            )
        if not isinstance(self.gender, Gender):
            object.__setattr__(self, "gender", Gender(int(self.gender)))


@dataclass
class WritingSession:
    """A child's full recording plus metadata and therapist label.

    Frames are held column-wise: `timestamps` (T,) and `values` (T, 10)
    in CHANNELS order. `frames` materializes the row view.
    """

    meta: ChildMeta
    timestamps: np.ndarray
    values: np.ndarray
    sems_label: float

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != NUM_CHANNELS:
            raise DataError(
                f"session {self.meta.child_id!r}: values must be T x "
                f"{NUM_CHANNELS}, got {self.values.shape}"
            )
        if self.timestamps.shape[0] != self.values.shape[0]:
            raise DataError(
                f"session {self.meta.child_id!r}: {self.timestamps.shape[0]} "
                f"timestamps for {self.values.shape[0]} frames"
            )

    @property
    def child_id(self) -> str:
        return self.meta.child_id

    @property
    def num_frames(self) -> int:
        return int(self.values.shape[0])

    @property
    def frames(self) -> List[SensorFrame]:
        """Row view of the recording."""
        return [
            SensorFrame(int(ts), *(float(v) for v in row))
            for ts, row in zip(self.timestamps, self.values)
        ]

    def validate(self, scale_max: float) -> None:
        """Check the labeled-session invariants.

        Raises:
            DataError: empty recording, non-increasing timestamps, negative
                pressure/speed or label outside [0, scale_max]
        """
        who = f"session {self.child_id!r}"
        if self.num_frames == 0:
            raise DataError(f"{who} has no frames")
        steps = np.diff(self.timestamps)
        if np.any(steps <= 0):
            bad = int(np.argmax(steps <= 0)) + 1
            raise DataError(
                f"{who}: non-increasing timestamp at frame {bad} "
                f"({int(self.timestamps[bad - 1])} -> {int(self.timestamps[bad])})"
            )
        if not np.all(np.isfinite(self.values)):
            raise DataError(f"{who}: non-finite channel value")
        for c in NON_NEGATIVE_CHANNELS:
            if np.any(self.values[:, c] < 0):
                raise DataError(f"{who}: negative {CHANNELS[c]}")
        if not 0.0 <= self.sems_label <= scale_max:
            raise DataError(
                f"{who}: sems_label {self.sems_label} outside [0, {scale_max}]"
            )


@dataclass
class LabeledWindow:
    """Fixed n x 10 slice of a session carrying the session label."""

    values: np.ndarray
    sems_label: float
    source_child: str
    start: int = 0

    @property
    def window_len(self) -> int:
        return int(self.values.shape[0])


@dataclass
class ChannelStats:
    """Per-channel z-score statistics fitted on training windows."""

    mean: np.ndarray = field(default_factory=lambda: np.zeros(NUM_CHANNELS))
    std: np.ndarray = field(default_factory=lambda: np.ones(NUM_CHANNELS))

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelStats":
        return cls(
            mean=np.asarray(data["mean"], dtype=np.float64),
            std=np.asarray(data["std"], dtype=np.float64),
        )
