"""LSTM regression network written directly against numpy.

Gate rows of every weight matrix are stacked in the order input, forget,
output, cell-candidate:

    i, f, o = sigmoid(W x + U h + b)      g = tanh(W x + U h + b)
    c' = f * c + i * g                     h' = o * tanh(c')

All arithmetic is float64. Sequences are batched as (B, T, features).
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..models import NUM_CHANNELS, LabeledWindow
from ..utils.errors import ShapeError

logger = logging.getLogger(__name__)

GATES = ("input", "forget", "output", "cell")

Gradients = Dict[str, np.ndarray]


def sigmoid(z: np.ndarray) -> np.ndarray:
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class LSTMLayerParams:
    """Weights of one LSTM layer, gates stacked along the rows."""

    W: np.ndarray  # (4H, input_size)
    U: np.ndarray  # (4H, H)
    b: np.ndarray  # (4H,)

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.U = np.asarray(self.U, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        H = self.U.shape[1]
        if (
            self.U.shape != (4 * H, H)
            or self.W.ndim != 2
            or self.W.shape[0] != 4 * H
            or self.b.shape != (4 * H,)
        ):
            raise ShapeError(
                f"inconsistent LSTM layer shapes W{self.W.shape} "
                f"U{self.U.shape} b{self.b.shape}"
            )

    @property
    def hidden_size(self) -> int:
        return int(self.U.shape[1])

    @property
    def input_size(self) -> int:
        return int(self.W.shape[1])

    def gate(self, name: str) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(W, U, b) views of one gate."""
        k = GATES.index(name)
        H = self.hidden_size
        rows = slice(k * H, (k + 1) * H)
        return self.W[rows], self.U[rows], self.b[rows]

    @classmethod
    def init(
        cls, input_size: int, hidden_size: int, rng: np.random.Generator
    ) -> "LSTMLayerParams":
        """Uniform +-1/sqrt(fan_in) per matrix, forget-gate bias +1."""
        H = hidden_size
        W = rng.uniform(-1.0, 1.0, (4 * H, input_size)) / np.sqrt(input_size)
        U = rng.uniform(-1.0, 1.0, (4 * H, H)) / np.sqrt(H)
        b = np.zeros(4 * H)
        b[H : 2 * H] = 1.0
        return cls(W=W, U=U, b=b)

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int) -> "LSTMLayerParams":
        H = hidden_size
        return cls(
            W=np.zeros((4 * H, input_size)),
            U=np.zeros((4 * H, H)),
            b=np.zeros(4 * H),
        )


@dataclass
class LSTMModel:
    """Stacked LSTM layers, dropout after each layer, one-neuron dense head."""

    layers: List[LSTMLayerParams]
    dense_w: np.ndarray
    dense_b: np.ndarray
    dropout_rate: float = 0.2

    def __post_init__(self):
        self.dense_w = np.asarray(self.dense_w, dtype=np.float64)
        self.dense_b = np.asarray(self.dense_b, dtype=np.float64).reshape(1)
        if not self.layers:
            raise ShapeError("LSTM model needs at least one layer")
        if self.layers[0].input_size != NUM_CHANNELS:
            raise ShapeError(
                f"first layer input size {self.layers[0].input_size}, "
                f"expected {NUM_CHANNELS}"
            )
        for k in range(1, len(self.layers)):
            if self.layers[k].input_size != self.layers[k - 1].hidden_size:
                raise ShapeError(
                    f"layer {k} input size {self.layers[k].input_size} != "
                    f"layer {k - 1} hidden size {self.layers[k - 1].hidden_size}"
                )
        if self.dense_w.shape != (self.layers[-1].hidden_size,):
            raise ShapeError(
                f"dense weight length {self.dense_w.shape} != last hidden "
                f"size {self.layers[-1].hidden_size}"
            )
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ShapeError(f"dropout_rate {self.dropout_rate} not in [0, 1)")

    @property
    def input_size(self) -> int:
        return self.layers[0].input_size

    @property
    def layer_sizes(self) -> List[int]:
        return [layer.hidden_size for layer in self.layers]

    def parameters(self) -> Dict[str, np.ndarray]:
        """Named views of every trainable array, in a fixed order."""
        params: Dict[str, np.ndarray] = {}
        for k, layer in enumerate(self.layers):
            params[f"layer{k}.W"] = layer.W
            params[f"layer{k}.U"] = layer.U
            params[f"layer{k}.b"] = layer.b
        params["dense.w"] = self.dense_w
        params["dense.b"] = self.dense_b
        return params

    def copy(self) -> "LSTMModel":
        return LSTMModel(
            layers=[
                LSTMLayerParams(l.W.copy(), l.U.copy(), l.b.copy())
                for l in self.layers
            ],
            dense_w=self.dense_w.copy(),
            dense_b=self.dense_b.copy(),
            dropout_rate=self.dropout_rate,
        )

    def to_dict(self) -> dict:
        return {
            "layer_sizes": self.layer_sizes,
            "dropout_rate": self.dropout_rate,
            "layers": [
                {"W": l.W.tolist(), "U": l.U.tolist(), "b": l.b.tolist()}
                for l in self.layers
            ],
            "dense_w": self.dense_w.tolist(),
            "dense_b": float(self.dense_b[0]),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LSTMModel":
        return cls(
            layers=[
                LSTMLayerParams(W=l["W"], U=l["U"], b=l["b"])
                for l in data["layers"]
            ],
            dense_w=data["dense_w"],
            dense_b=[data["dense_b"]],
            dropout_rate=float(data["dropout_rate"]),
        )


def init_lstm_model(
    layer_sizes: Sequence[int],
    rng: np.random.Generator,
    dropout_rate: float = 0.2,
    input_size: int = NUM_CHANNELS,
) -> LSTMModel:
    """Randomly initialised model; dense bias starts at 0."""
    if not layer_sizes or any(int(h) < 1 for h in layer_sizes):
        raise ShapeError(f"invalid layer sizes {list(layer_sizes)}")
    layers = []
    fan_in = input_size
    for hidden in layer_sizes:
        layers.append(LSTMLayerParams.init(fan_in, int(hidden), rng))
        fan_in = int(hidden)
    dense_w = rng.uniform(-1.0, 1.0, fan_in) / np.sqrt(fan_in)
    return LSTMModel(
        layers=layers,
        dense_w=dense_w,
        dense_b=np.zeros(1),
        dropout_rate=dropout_rate,
    )


def lstm_cell_forward(
    x_t: np.ndarray,
    h_prev: np.ndarray,
    c_prev: np.ndarray,
    params: LSTMLayerParams,
) -> Tuple[np.ndarray, np.ndarray]:
    """One LSTM step for a vector (or a batch of row vectors).

    Raises:
        ShapeError: input or state length does not match the layer
    """
    x_t = np.asarray(x_t, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    H = params.hidden_size
    if x_t.shape[-1] != params.input_size:
        raise ShapeError(
            f"input length {x_t.shape[-1]} != layer input size {params.input_size}"
        )
    if h_prev.shape[-1] != H or c_prev.shape[-1] != H:
        raise ShapeError(f"state length must be {H}")

    z = x_t @ params.W.T + h_prev @ params.U.T + params.b
    i = sigmoid(z[..., :H])
    f = sigmoid(z[..., H : 2 * H])
    o = sigmoid(z[..., 2 * H : 3 * H])
    g = np.tanh(z[..., 3 * H :])
    c_t = f * c_prev + i * g
    h_t = o * np.tanh(c_t)
    return h_t, c_t


def layer_forward(
    X: np.ndarray, params: LSTMLayerParams
) -> Tuple[np.ndarray, dict]:
    """Run one layer over a batch of sequences from zero state.

    Args:
        X: Inputs, shape (B, T, input_size)
        params: Layer weights

    Returns:
        Hidden states (B, T, H) and the cache needed by `layer_backward`
    """
    if X.ndim != 3 or X.shape[2] != params.input_size:
        raise ShapeError(
            f"layer input shape {X.shape}, expected (B, T, {params.input_size})"
        )
    B, T, _ = X.shape
    H = params.hidden_size

    Zx = X @ params.W.T + params.b
    gates = np.empty((B, T, 4 * H))
    C = np.empty((B, T, H))
    Hs = np.empty((B, T, H))
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    for t in range(T):
        z = Zx[:, t] + h @ params.U.T
        gates[:, t, : 3 * H] = sigmoid(z[:, : 3 * H])
        gates[:, t, 3 * H :] = np.tanh(z[:, 3 * H :])
        i = gates[:, t, :H]
        f = gates[:, t, H : 2 * H]
        o = gates[:, t, 2 * H : 3 * H]
        g = gates[:, t, 3 * H :]
        c = f * c + i * g
        h = o * np.tanh(c)
        C[:, t] = c
        Hs[:, t] = h

    cache = {"X": X, "gates": gates, "C": C, "H": Hs}
    return Hs, cache


def layer_backward(
    dH: np.ndarray, cache: dict, params: LSTMLayerParams
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Backpropagation through time for one layer.

    Args:
        dH: Loss gradient w.r.t. every hidden state, (B, T, H)
        cache: Cache from `layer_forward`
        params: Layer weights

    Returns:
        (dX, dW, dU, db)
    """
    X, gates, C, Hs = cache["X"], cache["gates"], cache["C"], cache["H"]
    B, T, H = Hs.shape

    dZ = np.empty((B, T, 4 * H))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for t in reversed(range(T)):
        i = gates[:, t, :H]
        f = gates[:, t, H : 2 * H]
        o = gates[:, t, 2 * H : 3 * H]
        g = gates[:, t, 3 * H :]
        c_prev = C[:, t - 1] if t > 0 else np.zeros((B, H))
        tanh_c = np.tanh(C[:, t])

        dh = dH[:, t] + dh_next
        dc = dc_next + dh * o * (1.0 - tanh_c**2)
        dZ[:, t, :H] = dc * g * i * (1.0 - i)
        dZ[:, t, H : 2 * H] = dc * c_prev * f * (1.0 - f)
        dZ[:, t, 2 * H : 3 * H] = dh * tanh_c * o * (1.0 - o)
        dZ[:, t, 3 * H :] = dc * i * (1.0 - g**2)
        dc_next = dc * f
        dh_next = dZ[:, t] @ params.U

    H_prev = np.concatenate([np.zeros((B, 1, H)), Hs[:, :-1]], axis=1)
    dW = np.tensordot(dZ, X, axes=([0, 1], [0, 1]))
    dU = np.tensordot(dZ, H_prev, axes=([0, 1], [0, 1]))
    db = dZ.sum(axis=(0, 1))
    dX = dZ @ params.W
    return dX, dW, dU, db


@dataclass
class ForwardCache:
    """Everything `backward` needs from a train-mode forward pass."""

    layer_caches: List[dict]
    masks: List[Optional[np.ndarray]]
    head_input: np.ndarray
    predictions: np.ndarray


@dataclass
class ActivationTrace:
    """Per-layer hidden and cell sequences of one window."""

    hidden: List[np.ndarray] = field(default_factory=list)
    cell: List[np.ndarray] = field(default_factory=list)
    prediction: float = 0.0


def _dropout_mask(
    shape: Tuple[int, ...], rate: float, rng: Optional[np.random.Generator]
) -> np.ndarray:
    if rng is None:
        raise ShapeError("train-mode forward pass needs a random generator")
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def forward_batch(
    X: np.ndarray,
    model: LSTMModel,
    train: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[np.ndarray, ForwardCache]:
    """Forward pass over a batch of windows.

    Dropout sits on each layer's output: on the whole sequence between
    layers and on the final hidden state before the dense head. It is
    inverted, so infer mode uses the weights unchanged.

    Args:
        X: Windows, (B, T, 10)
        model: Network
        train: Apply dropout
        rng: Mask generator, required when train and dropout_rate > 0

    Returns:
        Predictions (B,) and the forward cache
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3 or X.shape[2] != model.input_size:
        raise ShapeError(
            f"window batch shape {X.shape}, expected (B, n, {model.input_size})"
        )
    use_dropout = train and model.dropout_rate > 0.0
    caches: List[dict] = []
    masks: List[Optional[np.ndarray]] = []

    inputs = X
    last = len(model.layers) - 1
    for k, layer in enumerate(model.layers):
        Hs, cache = layer_forward(inputs, layer)
        caches.append(cache)
        out = Hs if k < last else Hs[:, -1]
        if use_dropout:
            mask = _dropout_mask(out.shape, model.dropout_rate, rng)
            out = out * mask
        else:
            mask = None
        masks.append(mask)
        inputs = out

    head_input = inputs
    predictions = head_input @ model.dense_w + model.dense_b[0]
    return predictions, ForwardCache(caches, masks, head_input, predictions)


def forward_sequence(
    window: LabeledWindow,
    model: LSTMModel,
    mode: str = "infer",
    rng: Optional[np.random.Generator] = None,
) -> Tuple[float, ActivationTrace]:
    """Score one window and return its activation trace.

    Args:
        window: n x 10 window (already normalized)
        model: Network
        mode: "train" (dropout on) or "infer"
        rng: Mask generator for train mode
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    values = np.asarray(window.values, dtype=np.float64)
    if values.ndim != 2:
        raise ShapeError(f"window shape {values.shape}, expected (n, 10)")
    preds, cache = forward_batch(values[None], model, mode == "train", rng)
    trace = ActivationTrace(
        hidden=[c["H"][0].copy() for c in cache.layer_caches],
        cell=[c["C"][0].copy() for c in cache.layer_caches],
        prediction=float(preds[0]),
    )
    return float(preds[0]), trace


def predict_batch(
    X: np.ndarray, model: LSTMModel, chunk_size: int = 256
) -> np.ndarray:
    """Infer-mode predictions for many windows, in chunks."""
    out = [
        forward_batch(X[s : s + chunk_size], model)[0]
        for s in range(0, X.shape[0], chunk_size)
    ]
    return np.concatenate(out) if out else np.zeros(0)


def mse_loss(predictions: np.ndarray, targets: np.ndarray) -> float:
    """Mean squared error.

    Raises:
        ShapeError: empty or mismatched inputs
    """
    predictions = np.asarray(predictions, dtype=np.float64).ravel()
    targets = np.asarray(targets, dtype=np.float64).ravel()
    if predictions.size == 0 or predictions.shape != targets.shape:
        raise ShapeError(
            f"mse needs equal nonzero lengths, got {predictions.size} "
            f"and {targets.size}"
        )
    return float(np.mean((predictions - targets) ** 2))


def backward(
    targets: np.ndarray, model: LSTMModel, cache: ForwardCache
) -> Gradients:
    """Gradients of the batch-mean squared error w.r.t. every parameter.

    Args:
        targets: Labels of the batch, (B,)
        model: Network used in the forward pass
        cache: Cache (with dropout masks) of that forward pass

    Raises:
        ShapeError: cache missing or inconsistent with the model
    """
    if cache is None or len(cache.layer_caches) != len(model.layers):
        raise ShapeError("backward needs the forward cache of this model")
    targets = np.asarray(targets, dtype=np.float64).ravel()
    preds = cache.predictions
    if targets.shape != preds.shape:
        raise ShapeError(f"{targets.size} targets for {preds.size} predictions")
    B = preds.shape[0]

    dpred = 2.0 * (preds - targets) / B
    grads: Gradients = {}
    dense_w_grad = cache.head_input.T @ dpred
    dense_b_grad = np.array([dpred.sum()])

    dh_last = np.outer(dpred, model.dense_w)
    last = len(model.layers) - 1
    if cache.masks[last] is not None:
        dh_last = dh_last * cache.masks[last]
    T = cache.layer_caches[last]["H"].shape[1]
    dH = np.zeros((B, T, model.layers[last].hidden_size))
    dH[:, -1] = dh_last

    for k in reversed(range(len(model.layers))):
        dX, dW, dU, db = layer_backward(dH, cache.layer_caches[k], model.layers[k])
        grads[f"layer{k}.W"] = dW
        grads[f"layer{k}.U"] = dU
        grads[f"layer{k}.b"] = db
        if k > 0:
            mask = cache.masks[k - 1]
            dH = dX * mask if mask is not None else dX

    ordered = {name: grads[name] for name in model.parameters() if name in grads}
    ordered["dense.w"] = dense_w_grad
    ordered["dense.b"] = dense_b_grad
    return ordered


def loss_and_gradients(
    X: np.ndarray,
    y: np.ndarray,
    model: LSTMModel,
    rng: Optional[np.random.Generator] = None,
    train: bool = True,
) -> Tuple[float, Gradients]:
    """Forward in train mode then backward; returns (batch MSE, gradients)."""
    preds, cache = forward_batch(X, model, train=train, rng=rng)
    return mse_loss(preds, y), backward(y, model, cache)
