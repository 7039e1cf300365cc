"""Per-channel z-score normalization fitted on training windows."""

import logging
from dataclasses import replace
from typing import List, Sequence

import numpy as np

from ..models import CHANNELS, ChannelStats, LabeledWindow
from ..utils.errors import DataError

logger = logging.getLogger(__name__)


def fit_channel_stats(windows: Sequence[LabeledWindow]) -> ChannelStats:
    """Pool mean and population std per channel over all timesteps.

    Constant channels get std 1 so normalization never divides by zero.

    Raises:
        DataError: no windows supplied
    """
    if not windows:
        raise DataError("cannot fit channel statistics on zero windows")
    flat = np.concatenate([w.values for w in windows], axis=0)
    mean = flat.mean(axis=0)
    std = flat.std(axis=0)

    degenerate = ~(std > 0)
    if np.any(degenerate):
        names = [CHANNELS[c] for c in np.flatnonzero(degenerate)]
        logger.warning(f"Constant channels, std set to 1: {', '.join(names)}")
        std = np.where(degenerate, 1.0, std)
    return ChannelStats(mean=mean, std=std)


def normalize(window: LabeledWindow, stats: ChannelStats) -> LabeledWindow:
    """(value - mean_c) / std_c per channel; label and shape unchanged."""
    return replace(window, values=(window.values - stats.mean) / stats.std)


def denormalize(window: LabeledWindow, stats: ChannelStats) -> LabeledWindow:
    """Inverse of `normalize`."""
    return replace(window, values=window.values * stats.std + stats.mean)


def normalize_windows(
    windows: Sequence[LabeledWindow], stats: ChannelStats
) -> List[LabeledWindow]:
    return [normalize(w, stats) for w in windows]
