"""LSTM cell, forward pass, backpropagation, Adam and training loop."""

import math

import numpy as np
import pytest

from src.models import LabeledWindow
from src.network import (
    AdamState,
    LSTMLayerParams,
    LSTMModel,
    TrainConfig,
    adam_step,
    backward,
    clip_gradients,
    forward_batch,
    forward_sequence,
    init_lstm_model,
    loss_and_gradients,
    lstm_cell_forward,
    mse_loss,
    predict_batch,
    train,
)
from src.utils.errors import ShapeError, TrainingError
from tests.conftest import make_window


def _zero_model(sizes=(3, 2), bias=0.0):
    layers = []
    fan_in = 10
    for h in sizes:
        layers.append(LSTMLayerParams.zeros(fan_in, h))
        fan_in = h
    return LSTMModel(layers=layers, dense_w=np.zeros(fan_in), dense_b=[bias], dropout_rate=0.2)


def _relative_error(analytic, numeric):
    return np.abs(analytic - numeric) / np.maximum(np.abs(analytic) + np.abs(numeric), 1e-5)


def _numeric_gradient(model, X, y, seed=None, eps=1e-5):
    """Central differences of the batch MSE for every parameter entry."""

    def loss():
        rng = np.random.default_rng(seed) if seed is not None else None
        preds, _ = forward_batch(X, model, train=seed is not None, rng=rng)
        return mse_loss(preds, y)

    grads = {}
    for name, p in model.parameters().items():
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + eps
            plus = loss()
            p[idx] = old - eps
            minus = loss()
            p[idx] = old
            g[idx] = (plus - minus) / (2 * eps)
        grads[name] = g
    return grads


class TestCell:
    def test_zero_weights(self):
        params = LSTMLayerParams.zeros(10, 4)
        h, c = lstm_cell_forward(np.ones(10), np.zeros(4), np.zeros(4), params)
        np.testing.assert_array_equal(h, 0.0)
        np.testing.assert_array_equal(c, 0.0)

    def test_scalar_hand_evaluation(self):
        params = LSTMLayerParams(W=np.ones((4, 1)), U=np.ones((4, 1)), b=np.zeros(4))
        h, c = lstm_cell_forward(np.zeros(1), np.zeros(1), np.ones(1), params)
        assert c[0] == pytest.approx(0.5, abs=1e-15)
        assert h[0] == pytest.approx(0.5 * math.tanh(0.5), abs=1e-15)
        assert h[0] == pytest.approx(0.231058, abs=1e-6)

    def test_input_length_mismatch(self):
        params = LSTMLayerParams.zeros(10, 4)
        with pytest.raises(ShapeError):
            lstm_cell_forward(np.zeros(9), np.zeros(4), np.zeros(4), params)

    def test_gate_order(self):
        params = LSTMLayerParams.init(10, 3, np.random.default_rng(0))
        W, U, b = params.gate("forget")
        assert W.shape == (3, 10) and U.shape == (3, 3)
        np.testing.assert_array_equal(b, 1.0)


class TestForward:
    def test_zero_model_predicts_dense_bias(self, rng):
        model = _zero_model(bias=4.25)
        pred, trace = forward_sequence(make_window(rng), model)
        assert pred == 4.25
        for hidden in trace.hidden:
            np.testing.assert_array_equal(hidden, 0.0)

    def test_no_dropout_train_equals_infer(self, rng, small_model):
        window = make_window(rng)
        train_pred, _ = forward_sequence(window, small_model, "train", np.random.default_rng(0))
        infer_pred, _ = forward_sequence(window, small_model, "infer")
        assert train_pred == infer_pred

    def test_infer_is_deterministic(self, rng):
        model = init_lstm_model([5, 4], rng, dropout_rate=0.5)
        window = make_window(rng)
        a, trace_a = forward_sequence(window, model)
        b, trace_b = forward_sequence(window, model)
        assert a == b
        np.testing.assert_array_equal(trace_a.hidden[1], trace_b.hidden[1])

    def test_trace_shapes(self, rng, small_model):
        window = make_window(rng, n=9)
        pred, trace = forward_sequence(window, small_model)
        assert [h.shape for h in trace.hidden] == [(9, 5), (9, 4)]
        assert [c.shape for c in trace.cell] == [(9, 5), (9, 4)]
        assert trace.prediction == pred

    def test_batch_matches_single_windows(self, rng, small_model):
        windows = [make_window(rng) for _ in range(4)]
        X = np.stack([w.values for w in windows])
        batch = predict_batch(X, small_model, chunk_size=3)
        single = [forward_sequence(w, small_model)[0] for w in windows]
        np.testing.assert_allclose(batch, single, rtol=1e-12, atol=1e-12)

    def test_wrong_channel_count(self, small_model):
        window = LabeledWindow(np.zeros((7, 9)), 1.0, "c")
        with pytest.raises(ShapeError):
            forward_sequence(window, small_model)

    def test_inverted_dropout_preserves_mean(self, rng):
        model = init_lstm_model([6], rng, dropout_rate=0.2)
        x = rng.normal(size=(1, 5, 10))
        draws = 20000
        _, cache = forward_batch(np.repeat(x, draws, axis=0), model, train=True, rng=np.random.default_rng(9))
        _, infer_cache = forward_batch(x, model)
        sampled = cache.head_input.mean(axis=1)
        expected = infer_cache.head_input.mean()
        stderr = sampled.std() / math.sqrt(draws)
        assert abs(sampled.mean() - expected) < 3 * stderr


class TestLoss:
    def test_identical(self):
        assert mse_loss([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_forced_value(self):
        assert mse_loss([2.0], [0.0]) == 4.0

    def test_brute_force(self, rng):
        p, t = rng.normal(size=50), rng.normal(size=50)
        total = 0.0
        for a, b in zip(p, t):
            total += (a - b) ** 2
        assert mse_loss(p, t) == pytest.approx(total / 50, rel=1e-12)

    def test_mismatched(self):
        with pytest.raises(ShapeError):
            mse_loss([1.0], [1.0, 2.0])
        with pytest.raises(ShapeError):
            mse_loss([], [])


class TestBackward:
    @pytest.mark.parametrize("seed", range(20))
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        model = init_lstm_model([5, 4], rng, dropout_rate=0.0)
        model.dense_b[0] = rng.normal()
        X = rng.normal(size=(3, 7, 10))
        y = rng.normal(size=3)
        _, analytic = loss_and_gradients(X, y, model, train=False)
        numeric = _numeric_gradient(model, X, y)
        for name in model.parameters():
            assert _relative_error(analytic[name], numeric[name]).max() < 1e-4, name

    def test_matches_finite_differences_with_dropout_masks(self):
        rng = np.random.default_rng(100)
        model = init_lstm_model([5, 4], rng, dropout_rate=0.3)
        X = rng.normal(size=(3, 7, 10))
        y = rng.normal(size=3)
        _, analytic = loss_and_gradients(X, y, model, rng=np.random.default_rng(5))
        numeric = _numeric_gradient(model, X, y, seed=5)
        for name in model.parameters():
            assert _relative_error(analytic[name], numeric[name]).max() < 1e-4, name

    def test_dense_bias_gradient(self, rng, small_model):
        window = make_window(rng, label=2.0)
        pred, _ = forward_sequence(window, small_model)
        _, grads = loss_and_gradients(window.values[None], np.array([2.0]), small_model, train=False)
        assert grads["dense.b"][0] == pytest.approx(2.0 * (pred - 2.0), rel=1e-12)

    def test_zero_residual_gives_zero_gradients(self, rng, small_model):
        X = rng.normal(size=(2, 7, 10))
        preds, cache = forward_batch(X, small_model)
        grads = backward(preds.copy(), small_model, cache)
        for g in grads.values():
            np.testing.assert_array_equal(g, 0.0)

    def test_missing_cache(self, small_model):
        with pytest.raises(ShapeError):
            backward(np.zeros(1), small_model, None)

    def test_gradient_keys_follow_parameters(self, rng, small_model):
        _, grads = loss_and_gradients(rng.normal(size=(2, 7, 10)), np.zeros(2), small_model, train=False)
        assert list(grads) == list(small_model.parameters())


class _Scalar:
    def __init__(self, value=0.0):
        self.w = np.array([value])

    def parameters(self):
        return {"w": self.w}


class TestAdam:
    def test_first_step(self):
        model = _Scalar()
        state = AdamState.for_parameters(model.parameters())
        adam_step(model, {"w": np.array([1.0])}, state, TrainConfig())
        assert model.w[0] == pytest.approx(-0.005, rel=1e-7)
        assert state.t == 1

    def test_zero_gradient_leaves_parameters(self):
        model = _Scalar(3.0)
        state = AdamState.for_parameters(model.parameters())
        adam_step(model, {"w": np.array([0.0])}, state, TrainConfig())
        assert model.w[0] == 3.0

    def test_matches_scalar_oracle(self, rng):
        cfg = TrainConfig(gradient_clip_norm=None)
        model = _Scalar(0.7)
        state = AdamState.for_parameters(model.parameters())
        w, m, v = 0.7, 0.0, 0.0
        for t in range(1, 101):
            g = float(rng.normal())
            adam_step(model, {"w": np.array([g])}, state, cfg)
            m = cfg.beta1 * m + (1 - cfg.beta1) * g
            v = cfg.beta2 * v + (1 - cfg.beta2) * g * g
            m_hat = m / (1 - cfg.beta1**t)
            v_hat = v / (1 - cfg.beta2**t)
            w -= cfg.learning_rate * m_hat / (math.sqrt(v_hat) + cfg.epsilon)
            assert abs(model.w[0] - w) < 1e-12

    def test_shape_mismatch(self):
        model = _Scalar()
        state = AdamState.for_parameters(model.parameters())
        with pytest.raises(ShapeError):
            adam_step(model, {"w": np.zeros(2)}, state, TrainConfig())
        with pytest.raises(ShapeError):
            adam_step(model, {"v": np.zeros(1)}, state, TrainConfig())

    def test_clipping_rescales_to_max_norm(self):
        grads = {"a": np.array([3.0]), "b": np.array([4.0])}
        clipped, norm = clip_gradients(grads, 1.0)
        assert norm == 5.0
        np.testing.assert_allclose([clipped["a"][0], clipped["b"][0]], [0.6, 0.8])
        same, _ = clip_gradients(grads, None)
        assert same is grads


def _constant_windows(rng, count, label=5.0, n=10):
    return [make_window(rng, n=n, label=label, child=f"c{k}") for k in range(count)]


class TestTraining:
    def test_constant_labels_converge(self, rng):
        cfg = TrainConfig(epochs=50, rng_seed=3)
        model, history = train(
            _constant_windows(rng, 30), _constant_windows(rng, 10), cfg, arch=(8, 6)
        )
        assert math.sqrt(min(history.val_mse)) < 0.1
        assert history.train_mse[-1] < history.train_mse[0]
        assert model.layer_sizes == [8, 6]

    def test_single_epoch_history(self, rng):
        _, history = train(_constant_windows(rng, 4), [], TrainConfig(epochs=1), arch=(3,))
        assert history.epochs == 1
        assert len(history.val_mse) == 1

    def test_same_seed_same_result(self, rng):
        train_w = [make_window(rng, label=float(k)) for k in range(6)]
        val_w = [make_window(rng, label=2.0) for _ in range(2)]
        cfg = TrainConfig(epochs=3, rng_seed=11)
        a, hist_a = train(train_w, val_w, cfg, arch=(4, 3))
        b, hist_b = train(train_w, val_w, cfg, arch=(4, 3))
        assert hist_a == hist_b
        for name, p in a.parameters().items():
            np.testing.assert_array_equal(p, b.parameters()[name])

    def test_empty_training_set(self):
        with pytest.raises(TrainingError, match=r"\[lstm\]"):
            train([], [], TrainConfig())

    def test_wraps_batches_on_tiny_sets(self, rng):
        cfg = TrainConfig(epochs=2, iterations_per_epoch=10)
        _, history = train(_constant_windows(rng, 3), [], cfg, arch=(3,))
        assert history.epochs == 2

    def test_serialization_round_trip(self, small_model):
        restored = LSTMModel.from_dict(small_model.to_dict())
        for name, p in small_model.parameters().items():
            assert restored.parameters()[name].tobytes() == p.tobytes()
        assert restored.dropout_rate == small_model.dropout_rate
