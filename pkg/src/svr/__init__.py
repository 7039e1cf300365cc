"""Epsilon support vector regression."""

from .smo import (
    KERNELS,
    DEFAULT_GRID,
    SVRHyper,
    SVRModel,
    kernel_matrix,
    fit_svr,
    decision_function,
    predict_svr,
    predict_svr_many,
    select_hyper,
)

__all__ = [
    "KERNELS",
    "DEFAULT_GRID",
    "SVRHyper",
    "SVRModel",
    "kernel_matrix",
    "fit_svr",
    "decision_function",
    "predict_svr",
    "predict_svr_many",
    "select_hyper",
]
