"""Evaluation metrics."""

from .metrics import (
    METRICS_HEADER,
    EvalConfig,
    rmse,
    confusion,
    classify_metrics,
    evaluate,
    format_metric,
    metrics_rows,
)

__all__ = [
    "METRICS_HEADER",
    "EvalConfig",
    "rmse",
    "confusion",
    "classify_metrics",
    "evaluate",
    "format_metric",
    "metrics_rows",
]
