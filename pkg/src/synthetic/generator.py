"""Synthetic cohorts with a known score function.

Ground-truth score
------------------
For a session with channel matrix V (T x 10):

    v_tip  = population variance of tip_pressure
    e_gyro = mean over frames of (gyro_x**2 + gyro_y**2 + gyro_z**2) / 3

    label_mode "default":           raw = 1.2 * v_tip + 1.2 * e_gyro / 1000
    label_mode "tip_pressure_only": raw = 2.4 * v_tip

    score = scale_max * (1 - exp(-raw))
    label = clip(score + noise_amplitude * u, 0, scale_max),  u ~ U(-1, 1)

`raw` is monotone in both statistics, so a child whose tip pressure and
rotation rate fluctuate more gets a higher (worse) score. Each child has
a latent difficulty z ~ U(0, 1) that scales the tip-pressure fluctuation
(0.2 + z) and, in the default mode, the gyro fluctuation (5 + 30 z deg/s).
In "tip_pressure_only" mode the gyro fluctuation is drawn independently
of z, so tip_pressure is the only channel carrying label information.
"""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from ..models import CHANNELS, ChildMeta, Gender, WritingSession
from ..utils.errors import ConfigError
from ..utils.seeding import derive_seed

logger = logging.getLogger(__name__)

LABEL_MODES = ("default", "tip_pressure_only")

TIP = CHANNELS.index("tip_pressure")
GYRO = [CHANNELS.index(c) for c in ("gyro_x", "gyro_y", "gyro_z")]

# Width of the moving-average filter that colours the noise.
_SMOOTHING = 5


@dataclass
class SynthConfig:
    """Synthetic cohort settings."""

    cohort_size: int = 40
    frames_per_session: int = 2400
    sampling_period_ms: int = 10
    scale_max: float = 12.0
    noise_amplitude: float = 0.5
    label_mode: str = "default"
    age_min: float = 7.0
    age_max: float = 9.0

    def __post_init__(self):
        for name in ("cohort_size", "frames_per_session", "sampling_period_ms"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive", name)
        if self.scale_max <= 0:
            raise ConfigError("scale_max must be positive", "scale_max")
        if self.noise_amplitude < 0:
            raise ConfigError(
                "noise_amplitude must be non-negative", "noise_amplitude"
            )
        if self.label_mode not in LABEL_MODES:
            raise ConfigError(
                f"label_mode must be one of {', '.join(LABEL_MODES)}",
                "label_mode",
            )
        if not 0 < self.age_min <= self.age_max:
            raise ConfigError("need 0 < age_min <= age_max", "age_min")


def ground_truth_score(values: np.ndarray, config: SynthConfig) -> float:
    """Noise-free score of a T x 10 channel matrix (see module docstring)."""
    v_tip = float(np.var(values[:, TIP]))
    if config.label_mode == "tip_pressure_only":
        raw = 2.4 * v_tip
    else:
        e_gyro = float(np.mean(values[:, GYRO] ** 2))
        raw = 1.2 * v_tip + 1.2 * e_gyro / 1000.0
    return float(config.scale_max * (1.0 - np.exp(-raw)))


def _coloured_noise(rng: np.random.Generator, length: int) -> np.ndarray:
    """Unit-variance moving-average noise."""
    white = rng.standard_normal(length + _SMOOTHING - 1)
    kernel = np.full(_SMOOTHING, 1.0 / np.sqrt(_SMOOTHING))
    return np.convolve(white, kernel, mode="valid")


def _generate_session(
    rng: np.random.Generator, child_id: str, config: SynthConfig
) -> WritingSession:
    T = config.frames_per_session
    z = rng.uniform()
    age = rng.uniform(config.age_min, config.age_max)
    gender = Gender(int(rng.integers(2)))

    tip_sigma = 0.2 + 1.0 * z
    if config.label_mode == "tip_pressure_only":
        gyro_sigma = 5.0 + 30.0 * rng.uniform()
    else:
        gyro_sigma = 5.0 + 30.0 * z

    t = np.arange(T)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    values = np.empty((T, len(CHANNELS)), dtype=np.float64)
    values[:, TIP] = np.maximum(3.0 + tip_sigma * _coloured_noise(rng, T), 0.0)
    values[:, 1] = np.maximum(1.5 + 0.3 * _coloured_noise(rng, T), 0.0)
    values[:, 2] = 0.5 * _coloured_noise(rng, T)
    values[:, 3] = 0.5 * _coloured_noise(rng, T)
    values[:, 4] = 9.81 + 0.5 * _coloured_noise(rng, T)
    for c in GYRO:
        values[:, c] = gyro_sigma * _coloured_noise(rng, T)
    values[:, 8] = (
        55.0 + 5.0 * np.sin(2.0 * np.pi * t / 400.0 + phase)
        + _coloured_noise(rng, T)
    )
    values[:, 9] = np.abs(20.0 + 8.0 * _coloured_noise(rng, T))

    score = ground_truth_score(values, config)
    u = rng.uniform(-1.0, 1.0)
    label = float(np.clip(score + config.noise_amplitude * u, 0.0, config.scale_max))

    return WritingSession(
        meta=ChildMeta(child_id=child_id, age_years=float(age), gender=gender),
        timestamps=t.astype(np.int64) * config.sampling_period_ms,
        values=values,
        sems_label=label,
    )


def generate_synthetic_cohort(
    config: SynthConfig, seed: int
) -> List[WritingSession]:
    """Generate `config.cohort_size` labeled sessions.

    Child k draws from its own stream `derive_seed(seed, "child", k)`, so
    a cohort is a prefix of any larger cohort with the same seed.
    """
    sessions = []
    for k in range(config.cohort_size):
        rng = np.random.default_rng(derive_seed(seed, "child", k))
        session = _generate_session(rng, f"child_{k:03d}", config)
        session.validate(config.scale_max)
        sessions.append(session)
    logger.info(
        f"Generated {len(sessions)} synthetic sessions "
        f"({config.frames_per_session} frames, mode {config.label_mode})"
    )
    return sessions
