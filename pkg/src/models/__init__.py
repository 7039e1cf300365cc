"""Data models for recordings, windows and reports."""

from .session_models import (
    CHANNELS,
    NUM_CHANNELS,
    Gender,
    SensorFrame,
    ChildMeta,
    WritingSession,
    LabeledWindow,
    ChannelStats,
)
from .report_models import (
    REPORT_METRICS,
    LEVELS,
    ConfusionCounts,
    ClassificationMetrics,
    EvalSummary,
    TrainingHistory,
    ValidationReport,
    ScorePrediction,
    TrialRecord,
    TrialSplit,
    CVReport,
    ImportanceReport,
    RunManifest,
)

__all__ = [
    "CHANNELS",
    "NUM_CHANNELS",
    "Gender",
    "SensorFrame",
    "ChildMeta",
    "WritingSession",
    "LabeledWindow",
    "ChannelStats",
    "REPORT_METRICS",
    "LEVELS",
    "ConfusionCounts",
    "ClassificationMetrics",
    "EvalSummary",
    "TrainingHistory",
    "ValidationReport",
    "ScorePrediction",
    "TrialRecord",
    "TrialSplit",
    "CVReport",
    "ImportanceReport",
    "RunManifest",
]
