"""Synthetic cohort generation."""

from .generator import (
    LABEL_MODES,
    SynthConfig,
    ground_truth_score,
    generate_synthetic_cohort,
)

__all__ = [
    "LABEL_MODES",
    "SynthConfig",
    "ground_truth_score",
    "generate_synthetic_cohort",
]
