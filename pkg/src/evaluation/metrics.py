"""RMSE, threshold confusion counts and the derived screening metrics."""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..models import ClassificationMetrics, ConfusionCounts, EvalSummary
from ..utils.errors import ConfigError, DataError

METRICS_HEADER = ("metric", "value")


@dataclass
class EvalConfig:
    """Screening threshold and SEMS scale."""

    threshold: float = 7.0
    scale_max: float = 12.0

    def __post_init__(self):
        if not 0 < self.threshold <= self.scale_max:
            raise ConfigError(
                "need 0 < threshold <= scale_max", "threshold"
            )


def _pair(predicted, actual) -> Tuple[np.ndarray, np.ndarray]:
    p = np.asarray(predicted, dtype=np.float64).ravel()
    a = np.asarray(actual, dtype=np.float64).ravel()
    if p.size == 0 or p.shape != a.shape:
        raise DataError(
            f"need equal nonzero lengths, got {p.size} and {a.size}"
        )
    return p, a


def rmse(predicted: Sequence[float], actual: Sequence[float]) -> float:
    """sqrt(sum((predicted - actual)^2) / number of observations)."""
    p, a = _pair(predicted, actual)
    return float(np.sqrt(np.sum((p - a) ** 2) / p.size))


def confusion(
    predicted: Sequence[float],
    actual: Sequence[float],
    cfg: Optional[EvalConfig] = None,
) -> ConfusionCounts:
    """Count pairs by `>= threshold` on each side."""
    cfg = cfg or EvalConfig()
    p, a = _pair(predicted, actual)
    pred_pos = p >= cfg.threshold
    true_pos = a >= cfg.threshold
    return ConfusionCounts(
        tp=int(np.sum(pred_pos & true_pos)),
        fp=int(np.sum(pred_pos & ~true_pos)),
        tn=int(np.sum(~pred_pos & ~true_pos)),
        fn=int(np.sum(~pred_pos & true_pos)),
    )


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den > 0 else None


def classify_metrics(c: ConfusionCounts) -> ClassificationMetrics:
    """Sensitivity, specificity, precision, recall, accuracy and F1.

    A zero denominator yields None, never 0.

    Raises:
        DataError: all counts are zero
    """
    if c.total <= 0:
        raise DataError("cannot derive metrics from empty confusion counts")
    sensitivity = _ratio(c.tp, c.tp + c.fn)
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = sensitivity
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return ClassificationMetrics(
        sensitivity=sensitivity,
        specificity=_ratio(c.tn, c.tn + c.fp),
        precision=precision,
        recall=recall,
        accuracy=(c.tp + c.tn) / c.total,
        f1=f1,
    )


def evaluate(
    predicted: Sequence[float],
    actual: Sequence[float],
    cfg: Optional[EvalConfig] = None,
    level: str = "child",
) -> EvalSummary:
    """RMSE plus confusion-derived metrics of one prediction set."""
    counts = confusion(predicted, actual, cfg)
    return EvalSummary(
        level=level,
        count=counts.total,
        rmse=rmse(predicted, actual),
        confusion=counts,
        metrics=classify_metrics(counts),
    )


def format_metric(value: Optional[float]) -> str:
    """Repr-exact float, `NA` for undefined."""
    return "NA" if value is None else repr(float(value))


def metrics_rows(summary: EvalSummary) -> List[Tuple[str, str]]:
    """Flat `metric,value` rows for one summary."""
    m = summary.metrics
    rows = [
        ("rmse", format_metric(summary.rmse)),
        ("accuracy", format_metric(m.accuracy)),
        ("f1", format_metric(m.f1)),
        ("sensitivity", format_metric(m.sensitivity)),
        ("specificity", format_metric(m.specificity)),
        ("precision", format_metric(m.precision)),
        ("recall", format_metric(m.recall)),
        ("tp", str(summary.confusion.tp)),
        ("fp", str(summary.confusion.fp)),
        ("tn", str(summary.confusion.tn)),
        ("fn", str(summary.confusion.fn)),
    ]
    return rows
