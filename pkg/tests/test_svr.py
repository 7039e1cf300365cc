"""Epsilon-SVR solver against an exact small-instance oracle."""

import itertools

import numpy as np
import pytest

from src.svr import (
    SVRHyper,
    SVRModel,
    decision_function,
    fit_svr,
    kernel_matrix,
    predict_svr,
    predict_svr_many,
    select_hyper,
)
from src.utils.errors import ConfigError, DataError

# Status of a coefficient in the exact oracle: at -C, free negative, zero,
# free positive, at +C.
STATES = ("-C", "-", "0", "+", "+C")


def _oracle(K, y, C, eps):
    """Solve the epsilon-SVR dual exactly by enumerating KKT patterns.

    For each assignment of coefficient states the free coefficients and
    the bias solve a square linear system; the first assignment whose
    solution satisfies every KKT condition is the optimum (unique in beta
    for a positive definite kernel). The bias is the midpoint of the
    interval allowed by the KKT conditions.
    """
    l = len(y)
    tol = 1e-9
    for pattern in itertools.product(STATES, repeat=l):
        beta = np.zeros(l)
        free = [i for i, s in enumerate(pattern) if s in ("-", "+")]
        for i, s in enumerate(pattern):
            if s == "+C":
                beta[i] = C
            elif s == "-C":
                beta[i] = -C
        n = len(free)
        A = np.zeros((n + 1, n + 1))
        rhs = np.zeros(n + 1)
        # rows: y_i - (K beta)_i - b = +-eps for free i, then sum(beta) = 0
        for r, i in enumerate(free):
            A[r, :n] = K[i, free]
            A[r, n] = 1.0
            target = eps if pattern[i] == "+" else -eps
            rhs[r] = y[i] - target - K[i] @ beta
        A[n, :n] = 1.0
        rhs[n] = -beta.sum()
        if n == 0:
            if abs(rhs[n]) > tol:
                continue
            bias_fixed = None
        else:
            try:
                sol = np.linalg.solve(A, rhs)
            except np.linalg.LinAlgError:
                continue
            if not np.allclose(A @ sol, rhs, rtol=0, atol=1e-8):
                continue
            beta[free] = sol[:n]
            bias_fixed = sol[n]
            signs_ok = all(
                (0 < beta[i] < C) if pattern[i] == "+" else (-C < beta[i] < 0)
                for i in free
            )
            if not signs_ok:
                continue
        f0 = K @ beta
        lower, upper = -np.inf, np.inf
        for i, s in enumerate(pattern):
            r = y[i] - f0[i]  # residual before bias
            if s == "0":
                lower, upper = max(lower, r - eps), min(upper, r + eps)
            elif s == "+C":
                upper = min(upper, r - eps)
            elif s == "-C":
                lower = max(lower, r + eps)
        if bias_fixed is not None:
            if not lower - tol <= bias_fixed <= upper + tol:
                continue
            return beta, bias_fixed
        if lower <= upper + tol:
            return beta, (lower + upper) / 2.0
    raise AssertionError("no KKT pattern found")


def _random_dataset(rng, l):
    X = np.column_stack(
        [rng.uniform(0, 12, l), rng.uniform(7, 9, l), rng.integers(0, 2, l)]
    )
    y = np.clip(0.8 * X[:, 0] + rng.normal(0, 1.0, l), 0, 12)
    return X, y


def _standardized(model, X):
    return (X - model.feature_mean) / model.feature_std


def _full_beta(model, X):
    """Dual coefficient of every training row (0 for non-support vectors)."""
    Z = _standardized(model, X)
    beta = np.zeros(len(X))
    for sv, coef in zip(model.support_vectors, model.dual_coef):
        match = np.flatnonzero(np.all(np.abs(Z - sv) < 1e-12, axis=1))
        beta[match[0]] = coef
    return beta


class TestFit:
    def test_constant_targets(self, rng):
        X, _ = _random_dataset(rng, 6)
        model = fit_svr(X, np.full(6, 4.5))
        np.testing.assert_allclose(predict_svr_many(model, X), 4.5, atol=1e-6)
        np.testing.assert_allclose(
            predict_svr_many(model, rng.uniform(0, 10, (5, 3))), 4.5, atol=1e-6
        )

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_exact_oracle_rbf(self, seed):
        rng = np.random.default_rng(seed)
        l = int(rng.integers(3, 7))
        X, y = _random_dataset(rng, l)
        hyper = SVRHyper(C=10.0, epsilon=0.1, tol=1e-10)
        model = fit_svr(X, y, hyper)
        Z = _standardized(model, X)
        K = kernel_matrix(Z, Z, "rbf", model.gamma)
        beta, bias = _oracle(K, y, hyper.C, hyper.epsilon)
        np.testing.assert_allclose(decision_function(model, X), K @ beta + bias, atol=1e-3)
        queries = rng.uniform([0, 7, 0], [12, 9, 1], (4, 3))
        Kp = kernel_matrix(_standardized(model, queries), Z, "rbf", model.gamma)
        np.testing.assert_allclose(decision_function(model, queries), Kp @ beta + bias, atol=1e-3)

    def test_matches_exact_oracle_linear(self, rng):
        X = np.column_stack([np.arange(5.0), np.full(5, 8.0), np.zeros(5)])
        y = 1.5 * np.arange(5.0) + np.array([0.05, -0.02, 0.03, 0.0, -0.04]) + 1.0
        hyper = SVRHyper(C=10.0, epsilon=0.01, kernel="linear", tol=1e-10)
        model = fit_svr(X, y, hyper)
        Z = _standardized(model, X)
        K = Z @ Z.T + 1e-12 * np.eye(5)
        beta, bias = _oracle(K, y, hyper.C, hyper.epsilon)
        np.testing.assert_allclose(decision_function(model, X), K @ beta + bias, atol=1e-3)

    @pytest.mark.parametrize("seed", range(5))
    def test_kkt_and_equality_constraint(self, seed):
        rng = np.random.default_rng(100 + seed)
        X, y = _random_dataset(rng, 12)
        hyper = SVRHyper(C=5.0, epsilon=0.2)
        model = fit_svr(X, y, hyper)
        assert abs(model.dual_coef.sum()) < 1e-8
        assert np.all(np.abs(model.dual_coef) <= hyper.C + 1e-8)
        beta = _full_beta(model, X)
        residual = decision_function(model, X) - y
        for b, r in zip(beta, residual):
            if 0 < abs(b) < hyper.C:
                assert abs(abs(r) - hyper.epsilon) < 1e-2
            elif b == 0:
                assert abs(r) <= hyper.epsilon + 1e-2

    def test_epsilon_tube_data_has_no_loss(self, rng):
        X = np.column_stack([np.linspace(0, 10, 8), np.full(8, 8.0), np.zeros(8)])
        y = 0.5 * X[:, 0] + 2.0
        model = fit_svr(X, y, SVRHyper(C=100.0, epsilon=0.1, kernel="linear", tol=1e-8))
        loss = np.maximum(np.abs(decision_function(model, X) - y) - 0.1, 0.0)
        assert loss.max() < 1e-3

    def test_single_row(self):
        with pytest.raises(DataError):
            fit_svr([[1.0, 8.0, 0.0]], [3.0])

    def test_non_finite(self):
        with pytest.raises(DataError):
            fit_svr([[1.0, 8.0, 0.0], [np.nan, 8.0, 1.0]], [3.0, 4.0])

    def test_deterministic(self, rng):
        X, y = _random_dataset(rng, 10)
        a, b = fit_svr(X, y), fit_svr(X, y)
        assert a.to_dict() == b.to_dict()

    def test_invalid_hyper(self):
        with pytest.raises(ConfigError) as err:
            SVRHyper(C=0.0)
        assert err.value.field == "C"
        with pytest.raises(ConfigError):
            SVRHyper(kernel="poly")


def _stub(bias, coef=(), sv=()):
    return SVRModel(
        support_vectors=np.asarray(sv, dtype=float).reshape(-1, 3),
        dual_coef=np.asarray(coef, dtype=float),
        bias=bias,
        kernel="linear",
        gamma=1.0,
        feature_mean=np.zeros(3),
        feature_std=np.ones(3),
        C=10.0,
        epsilon=0.1,
        scale_max=12.0,
    )


class TestPredict:
    def test_zero_coefficients_predict_clamped_bias(self):
        assert predict_svr(_stub(3.5), [1.0, 8.0, 0.0]) == 3.5
        assert predict_svr(_stub(-2.0), [1.0, 8.0, 0.0]) == 0.0

    def test_clamp_to_scale_max(self):
        identity = _stub(0.0, coef=[0.5, -0.5], sv=[[1, 0, 0], [-1, 0, 0]])
        assert decision_function(identity, [[13.2, 8.0, 1.0]])[0] == pytest.approx(13.2)
        assert predict_svr(identity, [13.2, 8.0, 1.0]) == 12.0

    def test_serialization_round_trip(self, rng):
        X, y = _random_dataset(rng, 8)
        model = fit_svr(X, y)
        restored = SVRModel.from_dict(model.to_dict())
        np.testing.assert_array_equal(decision_function(restored, X), decision_function(model, X))


class TestGridSearch:
    def test_picks_lowest_validation_rmse(self, rng):
        X, y = _random_dataset(rng, 12)
        Xv, yv = _random_dataset(rng, 6)
        best, results = select_hyper(X, y, Xv, yv, SVRHyper())
        assert len(results) == 9
        rmses = [r[2] for r in results]
        winner = results[int(np.argmin(rmses))]
        assert (best.C, best.epsilon) == (winner[0], winner[1])
