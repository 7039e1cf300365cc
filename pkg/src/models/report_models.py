"""Evaluation, prediction and run records."""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .session_models import CHANNELS

REPORT_METRICS: Tuple[str, ...] = (
    "rmse",
    "accuracy",
    "f1",
    "sensitivity",
    "specificity",
)
LEVELS: Tuple[str, ...] = ("window", "child")


@dataclass(frozen=True)
class ConfusionCounts:
    """Threshold confusion counts over evaluated pairs."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class ClassificationMetrics:
    """Threshold-derived metrics; None marks a zero denominator."""

    sensitivity: Optional[float]
    specificity: Optional[float]
    precision: Optional[float]
    recall: Optional[float]
    accuracy: Optional[float]
    f1: Optional[float]

    def as_dict(self) -> Dict[str, Optional[float]]:
        return asdict(self)


@dataclass(frozen=True)
class EvalSummary:
    """Metrics of one prediction set at one granularity."""

    level: str
    count: int
    rmse: float
    confusion: ConfusionCounts
    metrics: ClassificationMetrics

    def value(self, name: str) -> Optional[float]:
        """Metric by report column name."""
        if name == "rmse":
            return self.rmse
        return getattr(self.metrics, name)


@dataclass
class TrainingHistory:
    """Per-epoch losses of one training run."""

    train_mse: List[float] = field(default_factory=list)
    val_mse: List[float] = field(default_factory=list)
    best_epoch: int = -1

    @property
    def epochs(self) -> int:
        return len(self.train_mse)


@dataclass
class ValidationReport:
    """Validation-split evaluation returned by train_pipeline."""

    window: EvalSummary
    child: EvalSummary
    history: TrainingHistory
    svr_hyper: Dict[str, Any] = field(default_factory=dict)
    train_children: List[str] = field(default_factory=list)
    val_children: List[str] = field(default_factory=list)


@dataclass
class ScorePrediction:
    """Final score of one child plus its window-level LSTM scores."""

    child_id: str
    lstm_score: float
    final_score: float
    per_window_scores: List[float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "child_id": self.child_id,
            "lstm_score": self.lstm_score,
            "final_score": self.final_score,
            "per_window_scores": list(self.per_window_scores),
        }


@dataclass
class TrialRecord:
    """Test-split metrics of one cross-validation trial at one level."""

    trial: int
    level: str
    rmse: float
    accuracy: Optional[float]
    f1: Optional[float]
    sensitivity: Optional[float]
    specificity: Optional[float]

    @classmethod
    def from_summary(cls, trial: int, summary: EvalSummary) -> "TrialRecord":
        return cls(
            trial=trial,
            level=summary.level,
            **{name: summary.value(name) for name in REPORT_METRICS},
        )


@dataclass
class TrialSplit:
    """Child ids on each side of one trial's split."""

    trial: int
    train: List[str]
    val: List[str]
    test: List[str]


@dataclass
class CVReport:
    """Per-trial records and their mean/std aggregate."""

    records: List[TrialRecord] = field(default_factory=list)
    splits: List[TrialSplit] = field(default_factory=list)

    @property
    def trials(self) -> int:
        return len({r.trial for r in self.records})

    def aggregate(self) -> Dict[str, Dict[str, Tuple[Optional[float], Optional[float]]]]:
        """Mean and population std per level and metric.

        Undefined trial values are skipped; a metric undefined in every
        trial aggregates to (None, None).
        """
        result: Dict[str, Dict[str, Tuple[Optional[float], Optional[float]]]] = {}
        for level in LEVELS:
            rows = [r for r in self.records if r.level == level]
            if not rows:
                continue
            result[level] = {}
            for name in REPORT_METRICS:
                values = [getattr(r, name) for r in rows]
                values = [v for v in values if v is not None]
                if not values:
                    result[level][name] = (None, None)
                    continue
                arr = np.asarray(values, dtype=np.float64)
                result[level][name] = (float(arr.mean()), float(arr.std()))
        return result

    def comparison_row(self, level: str = "child") -> Dict[str, str]:
        """`mean +/- std` strings, accuracy and F1 in percent."""
        agg = self.aggregate().get(level, {})
        row = {}
        for name in ("accuracy", "f1", "rmse"):
            mean, std = agg.get(name, (None, None))
            if mean is None:
                row[name] = "-"
                continue
            scale = 1.0 if name == "rmse" else 100.0
            row[name] = f"{mean * scale:.2f} +/- {std * scale:.2f}"
        return row


@dataclass
class ImportanceReport:
    """Attention-derived channel importance."""

    overall: np.ndarray
    per_timestep: np.ndarray
    ranking: List[str]

    @classmethod
    def from_scores(
        cls, overall: np.ndarray, per_timestep: np.ndarray
    ) -> "ImportanceReport":
        # stable sort keeps CHANNELS order on ties
        order = np.argsort(-overall, kind="stable")
        return cls(
            overall=overall,
            per_timestep=per_timestep,
            ranking=[CHANNELS[i] for i in order],
        )


@dataclass
class RunManifest:
    """Metadata record written next to every command's outputs."""

    command: str
    seed: Optional[int]
    config: Dict[str, Any]
    inputs: Dict[str, str]
    outputs: List[str]
    duration_s: float
    checksums: Dict[str, str]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
