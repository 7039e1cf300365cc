"""Epsilon support vector regression solved by SMO.

The dual is written over 2l variables z = [alpha ; alpha*] with signs
s = [+1 ; -1]:

    min 1/2 z'Qz + p'z   s.t.  s'z = 0,  0 <= z <= C
    Q_ij = s_i s_j K(x_i, x_j),  p = [eps - y ; eps + y]

Working pairs are picked by maximal violation with second-order gain,
and the pair is solved analytically, as in LIBSVM. The fitted function
is f(x) = sum_i beta_i K(x_i, x) + b with beta = alpha - alpha*.
"""

import logging
import math
from dataclasses import asdict, dataclass, replace
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.errors import ConfigError, DataError

logger = logging.getLogger(__name__)

KERNELS = ("rbf", "linear")
TAU = 1e-12
DEFAULT_GRID: Tuple[Tuple[float, float], ...] = tuple(
    (C, eps) for C in (1.0, 10.0, 100.0) for eps in (0.05, 0.1, 0.5)
)


@dataclass
class SVRHyper:
    """Epsilon-SVR hyperparameters; gamma None means 1/(3 * feature variance)."""

    C: float = 10.0
    epsilon: float = 0.1
    kernel: str = "rbf"
    gamma: Optional[float] = None
    tol: float = 1e-3
    max_iter: int = 100000

    def __post_init__(self):
        if not self.C > 0:
            raise ConfigError("C must be positive", "C")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be non-negative", "epsilon")
        if self.kernel not in KERNELS:
            raise ConfigError(
                f"kernel must be one of {', '.join(KERNELS)}", "kernel"
            )
        if self.gamma is not None and not self.gamma > 0:
            raise ConfigError("gamma must be positive", "gamma")
        if not self.tol > 0:
            raise ConfigError("tol must be positive", "tol")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SVRModel:
    """Fitted f_SVM: support vectors in standardized feature space."""

    support_vectors: np.ndarray  # (m, 3), standardized
    dual_coef: np.ndarray  # (m,) beta = alpha - alpha*
    bias: float
    kernel: str
    gamma: float
    feature_mean: np.ndarray
    feature_std: np.ndarray
    C: float
    epsilon: float
    scale_max: float = 12.0

    def to_dict(self) -> dict:
        return {
            "support_vectors": np.asarray(self.support_vectors).tolist(),
            "dual_coef": np.asarray(self.dual_coef).tolist(),
            "bias": float(self.bias),
            "kernel": self.kernel,
            "gamma": float(self.gamma),
            "feature_mean": np.asarray(self.feature_mean).tolist(),
            "feature_std": np.asarray(self.feature_std).tolist(),
            "C": float(self.C),
            "epsilon": float(self.epsilon),
            "scale_max": float(self.scale_max),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SVRModel":
        sv = np.asarray(data["support_vectors"], dtype=np.float64)
        return cls(
            support_vectors=sv.reshape(-1, len(data["feature_mean"])),
            dual_coef=np.asarray(data["dual_coef"], dtype=np.float64),
            bias=float(data["bias"]),
            kernel=data["kernel"],
            gamma=float(data["gamma"]),
            feature_mean=np.asarray(data["feature_mean"], dtype=np.float64),
            feature_std=np.asarray(data["feature_std"], dtype=np.float64),
            C=float(data["C"]),
            epsilon=float(data["epsilon"]),
            scale_max=float(data["scale_max"]),
        )


def kernel_matrix(
    A: np.ndarray, B: np.ndarray, kernel: str, gamma: float
) -> np.ndarray:
    """K(a_i, b_j) for rows of A and B."""
    if kernel == "linear":
        return A @ B.T
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * A @ B.T
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


def _as_rows(rows: Iterable[Sequence[float]]) -> np.ndarray:
    X = np.asarray(list(rows), dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1) if X.size else X.reshape(0, 3)
    return X


def _select_pair(
    G: np.ndarray, z: np.ndarray, s: np.ndarray, Q: np.ndarray, QD: np.ndarray, C: float
) -> Tuple[int, int, float]:
    """Maximal-violating pair with second-order working set selection.

    Returns:
        (i, j, violation); j == -1 when no improving pair exists
    """
    up = ((s > 0) & (z < C)) | ((s < 0) & (z > 0))
    low = ((s > 0) & (z > 0)) | ((s < 0) & (z < C))
    minus_sG = -s * G

    if not np.any(up) or not np.any(low):
        return -1, -1, 0.0
    up_idx = np.flatnonzero(up)
    i = int(up_idx[np.argmax(minus_sG[up_idx])])
    g_max = minus_sG[i]

    low_idx = np.flatnonzero(low)
    g_max2 = np.max(-minus_sG[low_idx])
    violation = float(g_max + g_max2)

    grad_diff = g_max - minus_sG[low_idx]
    candidates = grad_diff > 0
    if not np.any(candidates):
        return i, -1, violation
    cand = low_idx[candidates]
    b = grad_diff[candidates]
    a = QD[i] + QD[cand] - 2.0 * s[i] * s[cand] * Q[i, cand]
    a = np.where(a > 0, a, TAU)
    j = int(cand[np.argmin(-(b * b) / a)])
    return i, j, violation


def _solve_dual(
    K: np.ndarray, y: np.ndarray, C: float, epsilon: float, tol: float, max_iter: int
) -> Tuple[np.ndarray, float, int]:
    """SMO over the 2l-variable dual. Returns (beta, bias, iterations)."""
    l = y.shape[0]
    s = np.concatenate([np.ones(l), -np.ones(l)])
    p = np.concatenate([epsilon - y, epsilon + y])
    Kfull = np.block([[K, K], [K, K]])
    Q = s[:, None] * s[None, :] * Kfull
    QD = np.diag(Kfull).copy()
    z = np.zeros(2 * l)
    G = p.copy()

    iterations = 0
    while iterations < max_iter:
        i, j, violation = _select_pair(G, z, s, Q, QD, C)
        if j < 0 or violation < tol:
            break
        iterations += 1
        old_i, old_j = z[i], z[j]
        if s[i] != s[j]:
            quad = QD[i] + QD[j] + 2.0 * Q[i, j]
            quad = quad if quad > 0 else TAU
            delta = (-G[i] - G[j]) / quad
            diff = z[i] - z[j]
            z[i] += delta
            z[j] += delta
            if diff > 0:
                if z[j] < 0:
                    z[j] = 0.0
                    z[i] = diff
            elif z[i] < 0:
                z[i] = 0.0
                z[j] = -diff
            if diff > 0:
                if z[i] > C:
                    z[i] = C
                    z[j] = C - diff
            elif z[j] > C:
                z[j] = C
                z[i] = C + diff
        else:
            quad = QD[i] + QD[j] - 2.0 * Q[i, j]
            quad = quad if quad > 0 else TAU
            delta = (G[i] - G[j]) / quad
            total = z[i] + z[j]
            z[i] -= delta
            z[j] += delta
            if total > C:
                if z[i] > C:
                    z[i] = C
                    z[j] = total - C
            elif z[j] < 0:
                z[j] = 0.0
                z[i] = total
            if total > C:
                if z[j] > C:
                    z[j] = C
                    z[i] = total - C
            elif z[i] < 0:
                z[i] = 0.0
                z[j] = total
        G += Q[i] * (z[i] - old_i) + Q[j] * (z[j] - old_j)
    else:
        logger.warning(f"SMO stopped at the iteration cap ({max_iter})")

    # bias from free variables, else midpoint of the feasible interval
    sG = s * G
    at_upper = z >= C
    at_lower = z <= 0
    free = ~at_upper & ~at_lower
    if np.any(free):
        rho = float(np.mean(sG[free]))
    else:
        ub_mask = (at_upper & (s < 0)) | (at_lower & (s > 0))
        lb_mask = (at_upper & (s > 0)) | (at_lower & (s < 0))
        ub = float(np.min(sG[ub_mask])) if np.any(ub_mask) else math.inf
        lb = float(np.max(sG[lb_mask])) if np.any(lb_mask) else -math.inf
        rho = (ub + lb) / 2.0
    beta = z[:l] - z[l:]
    return beta, -rho, iterations


def fit_svr(
    rows: Iterable[Sequence[float]],
    targets: Sequence[float],
    hyper: Optional[SVRHyper] = None,
    scale_max: float = 12.0,
) -> SVRModel:
    """Fit epsilon-SVR on (lstm_score, age, gender) rows.

    Features are z-scored internally (constant features keep std 1).

    Raises:
        DataError: fewer than 2 rows, mismatched lengths or non-finite values
    """
    hyper = hyper or SVRHyper()
    X = _as_rows(rows)
    y = np.asarray(targets, dtype=np.float64).ravel()
    if X.shape[0] < 2:
        raise DataError(f"SVR needs at least 2 rows, got {X.shape[0]}")
    if y.shape[0] != X.shape[0]:
        raise DataError(f"{X.shape[0]} rows but {y.shape[0]} targets")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("SVR inputs must be finite")

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    Z = (X - mean) / std

    gamma = hyper.gamma
    if gamma is None:
        var = float(Z.var())
        gamma = 1.0 / (3.0 * var) if var > 0 else 1.0 / 3.0

    K = kernel_matrix(Z, Z, hyper.kernel, gamma)
    beta, bias, iterations = _solve_dual(
        K, y, hyper.C, hyper.epsilon, hyper.tol, hyper.max_iter
    )
    keep = beta != 0
    logger.debug(
        f"SMO finished in {iterations} iterations, "
        f"{int(keep.sum())}/{len(y)} support vectors"
    )
    return SVRModel(
        support_vectors=Z[keep],
        dual_coef=beta[keep],
        bias=float(bias),
        kernel=hyper.kernel,
        gamma=float(gamma),
        feature_mean=mean,
        feature_std=std,
        C=hyper.C,
        epsilon=hyper.epsilon,
        scale_max=scale_max,
    )


def decision_function(model: SVRModel, X: np.ndarray) -> np.ndarray:
    """Unclamped f(x) for rows of raw (unstandardized) features."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Z = (X - model.feature_mean) / model.feature_std
    if model.dual_coef.size == 0:
        return np.full(X.shape[0], model.bias)
    K = kernel_matrix(Z, model.support_vectors, model.kernel, model.gamma)
    return K @ model.dual_coef + model.bias


def predict_svr(model: SVRModel, x: Sequence[float]) -> float:
    """Final score of one feature row, clamped to [0, scale_max]."""
    raw = float(decision_function(model, np.asarray(x, dtype=np.float64))[0])
    return float(np.clip(raw, 0.0, model.scale_max))


def predict_svr_many(model: SVRModel, X: np.ndarray) -> np.ndarray:
    return np.clip(decision_function(model, X), 0.0, model.scale_max)


def select_hyper(
    train_rows: np.ndarray,
    train_targets: np.ndarray,
    val_rows: np.ndarray,
    val_targets: np.ndarray,
    base: SVRHyper,
    grid: Sequence[Tuple[float, float]] = DEFAULT_GRID,
    scale_max: float = 12.0,
) -> Tuple[SVRHyper, List[Tuple[float, float, float]]]:
    """Grid search over (C, epsilon) by validation RMSE.

    Ties keep the earlier grid entry.

    Returns:
        (best hyper, [(C, epsilon, val_rmse), ...] in grid order)
    """
    results = []
    best = base
    best_rmse = math.inf
    for C, eps in grid:
        candidate = replace(base, C=C, epsilon=eps)
        model = fit_svr(train_rows, train_targets, candidate, scale_max)
        preds = predict_svr_many(model, val_rows)
        rmse = float(np.sqrt(np.mean((preds - val_targets) ** 2)))
        results.append((C, eps, rmse))
        if rmse < best_rmse:
            best_rmse = rmse
            best = candidate
    logger.info(
        f"SVR grid search picked C={best.C}, epsilon={best.epsilon} "
        f"(val rmse {best_rmse:.4f})"
    )
    return best, results
