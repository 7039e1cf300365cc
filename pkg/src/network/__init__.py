"""From-scratch recurrent networks, optimizer and training loop."""

from .lstm import (
    GATES,
    Gradients,
    sigmoid,
    LSTMLayerParams,
    LSTMModel,
    ActivationTrace,
    ForwardCache,
    init_lstm_model,
    lstm_cell_forward,
    layer_forward,
    layer_backward,
    forward_batch,
    forward_sequence,
    predict_batch,
    mse_loss,
    backward,
    loss_and_gradients,
)
from .optimizer import AdamState, adam_step, clip_gradients, global_norm
from .trainer import DEFAULT_LAYER_SIZES, TrainConfig, fit_network, train
from .imv import (
    DEFAULT_SEGMENT_SIZE,
    IMVModel,
    IMVAttention,
    block_masks,
    init_imv_model,
    imv_forward,
    imv_forward_batch,
    imv_backward,
    imv_loss_and_gradients,
    train_imv,
    importance_report,
)

__all__ = [
    "GATES",
    "Gradients",
    "sigmoid",
    "LSTMLayerParams",
    "LSTMModel",
    "ActivationTrace",
    "ForwardCache",
    "init_lstm_model",
    "lstm_cell_forward",
    "layer_forward",
    "layer_backward",
    "forward_batch",
    "forward_sequence",
    "predict_batch",
    "mse_loss",
    "backward",
    "loss_and_gradients",
    "AdamState",
    "adam_step",
    "clip_gradients",
    "global_norm",
    "DEFAULT_LAYER_SIZES",
    "TrainConfig",
    "fit_network",
    "train",
    "DEFAULT_SEGMENT_SIZE",
    "IMVModel",
    "IMVAttention",
    "block_masks",
    "init_imv_model",
    "imv_forward",
    "imv_forward_batch",
    "imv_backward",
    "imv_loss_and_gradients",
    "train_imv",
    "importance_report",
]
