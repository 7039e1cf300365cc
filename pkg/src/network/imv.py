"""Variable-wise LSTM with temporal attention and a mixture over variables.

The hidden state is split into one segment of `d` units per input channel.
Segment v is updated only from channel v and from its own previous value,
which is realized as a single LSTM layer of width 10*d whose input and
recurrent matrices are block-diagonal (off-block entries are held at
exactly zero by masking their gradients).

For every channel v:

    e_t^v   = a_v . h_t^v + a0_v              temporal evidence
    alpha^v = softmax_t(e^v)                  temporal attention
    g^v     = sum_t alpha_t^v h_t^v           context
    phi^v   = [g^v ; h_n^v]
    mu_v    = w_v . phi^v + w0_v              per-channel expert
    s_v     = q_v . phi^v + q0_v              mixture evidence
    p       = softmax_v(s)
    prediction = sum_v p_v mu_v

The mixture probabilities p give overall channel importance, the
alpha columns give importance per time step.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..models import NUM_CHANNELS, ImportanceReport, LabeledWindow, TrainingHistory
from ..preprocessing import stack_windows
from ..utils.errors import DataError, ShapeError, TrainingError
from ..utils.seeding import derive_seed
from .lstm import LSTMLayerParams, layer_backward, layer_forward, mse_loss
from .trainer import TrainConfig, fit_network

logger = logging.getLogger(__name__)

DEFAULT_SEGMENT_SIZE = 8


def _softmax(z: np.ndarray, axis: int) -> np.ndarray:
    shifted = z - z.max(axis=axis, keepdims=True)
    ez = np.exp(shifted)
    return ez / ez.sum(axis=axis, keepdims=True)


def block_masks(num_vars: int, segment_size: int) -> Tuple[np.ndarray, np.ndarray]:
    """0/1 masks for the stacked-gate input (4H x V) and recurrent (4H x H) matrices."""
    H = num_vars * segment_size
    row_var = (np.arange(4 * H) % H) // segment_size
    col_var = np.arange(H) // segment_size
    W_mask = (row_var[:, None] == np.arange(num_vars)[None, :]).astype(np.float64)
    U_mask = (row_var[:, None] == col_var[None, :]).astype(np.float64)
    return W_mask, U_mask


@dataclass
class IMVModel:
    """Parameters of the variable-wise attention network."""

    segment_size: int
    lstm: LSTMLayerParams
    attn_w: np.ndarray  # (V, d)
    attn_b: np.ndarray  # (V,)
    head_w: np.ndarray  # (V, 2d)
    head_b: np.ndarray  # (V,)
    mix_w: np.ndarray  # (V, 2d)
    mix_b: np.ndarray  # (V,)

    def __post_init__(self):
        V = self.num_vars
        d = self.segment_size
        if self.lstm.hidden_size != V * d or self.lstm.input_size != V:
            raise ShapeError(
                f"recurrent block must map {V} channels to {V * d} units"
            )
        for name, shape in (
            ("attn_w", (V, d)),
            ("attn_b", (V,)),
            ("head_w", (V, 2 * d)),
            ("head_b", (V,)),
            ("mix_w", (V, 2 * d)),
            ("mix_b", (V,)),
        ):
            value = np.asarray(getattr(self, name), dtype=np.float64)
            if value.shape != shape:
                raise ShapeError(f"{name} shape {value.shape}, expected {shape}")
            setattr(self, name, value)

    @property
    def num_vars(self) -> int:
        return int(np.shape(self.attn_b)[0])

    def parameters(self) -> Dict[str, np.ndarray]:
        return {
            "lstm.W": self.lstm.W,
            "lstm.U": self.lstm.U,
            "lstm.b": self.lstm.b,
            "attn.w": self.attn_w,
            "attn.b": self.attn_b,
            "head.w": self.head_w,
            "head.b": self.head_b,
            "mix.w": self.mix_w,
            "mix.b": self.mix_b,
        }

    def copy(self) -> "IMVModel":
        return IMVModel(
            segment_size=self.segment_size,
            lstm=LSTMLayerParams(
                self.lstm.W.copy(), self.lstm.U.copy(), self.lstm.b.copy()
            ),
            attn_w=self.attn_w.copy(),
            attn_b=self.attn_b.copy(),
            head_w=self.head_w.copy(),
            head_b=self.head_b.copy(),
            mix_w=self.mix_w.copy(),
            mix_b=self.mix_b.copy(),
        )


def init_imv_model(
    rng: np.random.Generator,
    segment_size: int = DEFAULT_SEGMENT_SIZE,
    num_vars: int = NUM_CHANNELS,
) -> IMVModel:
    """Random block-diagonal initialisation with a near-uniform mixture."""
    d = segment_size
    V = num_vars
    H = V * d
    W_mask, U_mask = block_masks(V, d)
    W = rng.uniform(-1.0, 1.0, (4 * H, V)) * W_mask
    U = rng.uniform(-1.0, 1.0, (4 * H, H)) / np.sqrt(d) * U_mask
    b = np.zeros(4 * H)
    b[H : 2 * H] = 1.0
    scale = 1.0 / np.sqrt(2 * d)
    return IMVModel(
        segment_size=d,
        lstm=LSTMLayerParams(W=W, U=U, b=b),
        attn_w=rng.uniform(-1.0, 1.0, (V, d)) / np.sqrt(d),
        attn_b=np.zeros(V),
        head_w=rng.uniform(-scale, scale, (V, 2 * d)),
        head_b=np.zeros(V),
        mix_w=rng.uniform(-0.1 * scale, 0.1 * scale, (V, 2 * d)),
        mix_b=np.zeros(V),
    )


@dataclass
class IMVAttention:
    """Attention tensors of one window."""

    temporal: np.ndarray  # (n, V), columns sum to 1
    mixture: np.ndarray  # (V,), sums to 1
    experts: np.ndarray  # (V,) per-channel predictions
    hidden: np.ndarray  # (n, V, d)


def imv_forward_batch(X: np.ndarray, model: IMVModel) -> Tuple[np.ndarray, dict]:
    """Predictions (B,) and cache for a batch of windows (B, n, V)."""
    X = np.asarray(X, dtype=np.float64)
    V, d = model.num_vars, model.segment_size
    if X.ndim != 3 or X.shape[2] != V:
        raise ShapeError(f"window batch shape {X.shape}, expected (B, n, {V})")
    B, T, _ = X.shape

    Hflat, lstm_cache = layer_forward(X, model.lstm)
    Hs = Hflat.reshape(B, T, V, d)

    e = np.einsum("btvd,vd->btv", Hs, model.attn_w) + model.attn_b
    alpha = _softmax(e, axis=1)
    g = np.einsum("btv,btvd->bvd", alpha, Hs)
    phi = np.concatenate([g, Hs[:, -1]], axis=-1)
    mu = np.einsum("bvk,vk->bv", phi, model.head_w) + model.head_b
    s = np.einsum("bvk,vk->bv", phi, model.mix_w) + model.mix_b
    p = _softmax(s, axis=1)
    preds = np.sum(p * mu, axis=1)

    cache = {
        "lstm": lstm_cache,
        "Hs": Hs,
        "alpha": alpha,
        "phi": phi,
        "mu": mu,
        "p": p,
        "preds": preds,
    }
    return preds, cache


def imv_forward(
    window: LabeledWindow, model: IMVModel
) -> Tuple[float, IMVAttention]:
    """Score one window and return its attention tensors."""
    values = np.asarray(window.values, dtype=np.float64)
    if values.ndim != 2:
        raise ShapeError(f"window shape {values.shape}, expected (n, 10)")
    preds, cache = imv_forward_batch(values[None], model)
    return float(preds[0]), IMVAttention(
        temporal=cache["alpha"][0],
        mixture=cache["p"][0],
        experts=cache["mu"][0],
        hidden=cache["Hs"][0],
    )


def imv_backward(
    targets: np.ndarray, model: IMVModel, cache: dict
) -> Dict[str, np.ndarray]:
    """Gradients of the batch-mean squared error of the mixture prediction."""
    targets = np.asarray(targets, dtype=np.float64).ravel()
    preds = cache["preds"]
    Hs, alpha, phi, mu, p = (
        cache["Hs"], cache["alpha"], cache["phi"], cache["mu"], cache["p"]
    )
    B, T, V, d = Hs.shape

    dpred = 2.0 * (preds - targets) / B
    dmu = dpred[:, None] * p
    dp = dpred[:, None] * mu
    ds = p * (dp - np.sum(p * dp, axis=1, keepdims=True))

    grads: Dict[str, np.ndarray] = {}
    grads["head.w"] = np.einsum("bv,bvk->vk", dmu, phi)
    grads["head.b"] = dmu.sum(axis=0)
    grads["mix.w"] = np.einsum("bv,bvk->vk", ds, phi)
    grads["mix.b"] = ds.sum(axis=0)

    dphi = dmu[..., None] * model.head_w[None] + ds[..., None] * model.mix_w[None]
    dg = dphi[..., :d]
    dh_last = dphi[..., d:]

    dalpha = np.einsum("bvd,btvd->btv", dg, Hs)
    dHs = alpha[..., None] * dg[:, None]
    de = alpha * (dalpha - np.sum(alpha * dalpha, axis=1, keepdims=True))
    grads["attn.w"] = np.einsum("btv,btvd->vd", de, Hs)
    grads["attn.b"] = de.sum(axis=(0, 1))
    dHs = dHs + de[..., None] * model.attn_w[None, None]
    dHs[:, -1] += dh_last

    _, dW, dU, db = layer_backward(
        dHs.reshape(B, T, V * d), cache["lstm"], model.lstm
    )
    W_mask, U_mask = block_masks(V, d)
    grads["lstm.W"] = dW * W_mask
    grads["lstm.U"] = dU * U_mask
    grads["lstm.b"] = db
    return {name: grads[name] for name in model.parameters()}


def imv_loss_and_gradients(
    X: np.ndarray, y: np.ndarray, model: IMVModel
) -> Tuple[float, Dict[str, np.ndarray]]:
    preds, cache = imv_forward_batch(X, model)
    return mse_loss(preds, y), imv_backward(y, model, cache)


def imv_predict(model: IMVModel, X: np.ndarray, chunk_size: int = 256) -> np.ndarray:
    out = [
        imv_forward_batch(X[s : s + chunk_size], model)[0]
        for s in range(0, X.shape[0], chunk_size)
    ]
    return np.concatenate(out) if out else np.zeros(0)


def train_imv(
    train_windows: Sequence[LabeledWindow],
    val_windows: Sequence[LabeledWindow],
    cfg: TrainConfig,
    segment_size: int = DEFAULT_SEGMENT_SIZE,
) -> Tuple[IMVModel, TrainingHistory]:
    """Train the attention network with the LSTM's optimizer and schedule.

    Every expert's bias starts at the mean training label.

    Raises:
        TrainingError: empty training set or diverging loss
    """
    if not train_windows:
        raise TrainingError("empty training set", "imv")
    X_train, y_train = stack_windows(train_windows)
    if val_windows:
        X_val, y_val = stack_windows(val_windows)
    else:
        X_val, y_val = np.zeros((0,) + X_train.shape[1:]), np.zeros(0)

    init_rng = np.random.default_rng(derive_seed(cfg.rng_seed, "imv-init"))
    model = init_imv_model(init_rng, segment_size, X_train.shape[2])
    model.head_b[:] = float(np.mean(y_train))

    logger.info(
        f"Training attention network (d={segment_size}) on "
        f"{len(train_windows)} windows, {cfg.epochs} epochs"
    )
    train_rng = np.random.default_rng(derive_seed(cfg.rng_seed, "imv-train"))
    return fit_network(
        model,
        X_train,
        y_train,
        X_val,
        y_val,
        cfg,
        lambda m, Xb, yb, rng: imv_loss_and_gradients(Xb, yb, m),
        lambda m, X: imv_predict(m, X),
        train_rng,
        stage="imv",
    )


def importance_report(
    model: IMVModel, windows: Sequence[LabeledWindow]
) -> ImportanceReport:
    """Average mixture and temporal attention over a window set.

    Raises:
        DataError: no windows
    """
    if not windows:
        raise DataError("importance report needs at least one window")
    X, _ = stack_windows(windows)
    mixtures: List[np.ndarray] = []
    temporals: List[np.ndarray] = []
    for s in range(0, X.shape[0], 256):
        _, cache = imv_forward_batch(X[s : s + 256], model)
        mixtures.append(cache["p"])
        temporals.append(cache["alpha"])
    p = np.concatenate(mixtures)
    alpha = np.concatenate(temporals)
    overall = p.mean(axis=0)
    per_timestep = alpha.mean(axis=0)
    return ImportanceReport.from_scores(overall, per_timestep)
