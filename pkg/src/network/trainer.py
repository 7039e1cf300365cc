"""Mini-batch training loop shared by the LSTM and attention networks."""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from ..models import LabeledWindow, TrainingHistory
from ..preprocessing import stack_windows
from ..utils.errors import ConfigError, TrainingError
from ..utils.seeding import derive_seed
from .lstm import (
    LSTMModel,
    init_lstm_model,
    loss_and_gradients,
    mse_loss,
    predict_batch,
)
from .optimizer import AdamState, adam_step

logger = logging.getLogger(__name__)

DEFAULT_LAYER_SIZES = (70, 50)
LOG_EVERY = 25


@dataclass
class TrainConfig:
    """Optimizer and schedule settings."""

    learning_rate: float = 0.005
    epochs: int = 250
    iterations_per_epoch: int = 10
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    rng_seed: int = 0
    gradient_clip_norm: Optional[float] = 5.0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive", "learning_rate")
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1", "epochs")
        if self.iterations_per_epoch < 1:
            raise ConfigError(
                "iterations_per_epoch must be at least 1", "iterations_per_epoch"
            )
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError("beta1 and beta2 must lie in [0, 1)", "beta1")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive", "epsilon")
        if self.gradient_clip_norm is not None and self.gradient_clip_norm <= 0:
            self.gradient_clip_norm = None

    def to_dict(self) -> dict:
        return asdict(self)


LossFn = Callable[[object, np.ndarray, np.ndarray, np.random.Generator], Tuple[float, dict]]
PredictFn = Callable[[object, np.ndarray], np.ndarray]


def batch_indices(
    permutation: np.ndarray, iteration: int, batch_size: int
) -> np.ndarray:
    """Indices of mini-batch `iteration`, wrapping around the permutation."""
    n = permutation.shape[0]
    positions = np.arange(iteration * batch_size, (iteration + 1) * batch_size)
    return permutation[positions % n]


def fit_network(
    model,
    X_train: np.ndarray,
    y_train: np.ndarray,
    X_val: np.ndarray,
    y_val: np.ndarray,
    cfg: TrainConfig,
    loss_fn: LossFn,
    predict_fn: PredictFn,
    rng: np.random.Generator,
    stage: str,
):
    """Run the epoch/iteration schedule and keep the best-validation model.

    Each epoch reshuffles the training set and takes
    `cfg.iterations_per_epoch` mini-batches of ceil(N / iterations), so
    one epoch covers the data once. Without validation windows the
    epoch's mean training loss selects the model.

    Returns:
        (best model, TrainingHistory)

    Raises:
        TrainingError: loss becomes non-finite
    """
    n_train = X_train.shape[0]
    batch_size = math.ceil(n_train / cfg.iterations_per_epoch)
    state = AdamState.for_parameters(model.parameters())
    history = TrainingHistory()
    best_score = math.inf
    best_model = model.copy()

    for epoch in range(cfg.epochs):
        permutation = rng.permutation(n_train)
        losses = []
        for it in range(cfg.iterations_per_epoch):
            idx = batch_indices(permutation, it, batch_size)
            loss, grads = loss_fn(model, X_train[idx], y_train[idx], rng)
            if not math.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch + 1}, iteration {it + 1}",
                    stage,
                )
            adam_step(model, grads, state, cfg)
            losses.append(loss)

        train_mse = float(np.mean(losses))
        if X_val.shape[0] > 0:
            val_mse = mse_loss(predict_fn(model, X_val), y_val)
        else:
            val_mse = train_mse
        history.train_mse.append(train_mse)
        history.val_mse.append(val_mse)

        if val_mse < best_score:
            best_score = val_mse
            best_model = model.copy()
            history.best_epoch = epoch

        logger.debug(
            f"[{stage}] epoch {epoch + 1}: train_mse={train_mse:.6f} "
            f"val_mse={val_mse:.6f}"
        )
        if (epoch + 1) % LOG_EVERY == 0 or epoch + 1 == cfg.epochs:
            logger.info(
                f"[{stage}] epoch {epoch + 1}/{cfg.epochs} "
                f"train_mse={train_mse:.4f} val_mse={val_mse:.4f}"
            )

    logger.info(
        f"[{stage}] best epoch {history.best_epoch + 1} "
        f"val_mse={best_score:.4f}"
    )
    return best_model, history


def _empty_like_batch(X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return np.zeros((0,) + X.shape[1:]), np.zeros(0)


def _lstm_loss(model, Xb, yb, rng):
    return loss_and_gradients(Xb, yb, model, rng=rng, train=True)


def _lstm_predict(model, X):
    return predict_batch(X, model)


def train(
    train_windows: Sequence[LabeledWindow],
    val_windows: Sequence[LabeledWindow],
    cfg: TrainConfig,
    arch: Sequence[int] = DEFAULT_LAYER_SIZES,
    dropout_rate: float = 0.2,
) -> Tuple[LSTMModel, TrainingHistory]:
    """Train the LSTM regressor on normalized windows.

    The dense bias starts at the mean training label.

    Args:
        train_windows: Normalized training windows
        val_windows: Normalized validation windows (may be empty)
        cfg: Optimizer and schedule
        arch: Hidden sizes per layer
        dropout_rate: Dropout after every layer

    Returns:
        (best-validation model, history)

    Raises:
        TrainingError: empty training set or diverging loss
    """
    if not train_windows:
        raise TrainingError("empty training set", "lstm")
    X_train, y_train = stack_windows(train_windows)
    if val_windows:
        X_val, y_val = stack_windows(val_windows)
    else:
        X_val, y_val = _empty_like_batch(X_train)

    init_rng = np.random.default_rng(derive_seed(cfg.rng_seed, "lstm-init"))
    model = init_lstm_model(arch, init_rng, dropout_rate=dropout_rate)
    model.dense_b[0] = float(np.mean(y_train))

    logger.info(
        f"Training LSTM {list(arch)} on {len(train_windows)} windows "
        f"({len(val_windows)} validation), {cfg.epochs} epochs"
    )
    train_rng = np.random.default_rng(derive_seed(cfg.rng_seed, "lstm-train"))
    return fit_network(
        model,
        X_train,
        y_train,
        X_val,
        y_val,
        cfg,
        _lstm_loss,
        _lstm_predict,
        train_rng,
        stage="lstm",
    )
