"""Adam with optional global-norm gradient clipping."""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from ..utils.errors import ShapeError


@dataclass
class AdamState:
    """First/second moment accumulators keyed like the parameters."""

    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def for_parameters(cls, params: Dict[str, np.ndarray]) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            t=0,
        )


def global_norm(grads: Dict[str, np.ndarray]) -> float:
    """L2 norm over all gradient arrays, summed in key order."""
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g * g))
    return float(np.sqrt(total))


def clip_gradients(
    grads: Dict[str, np.ndarray], max_norm: Optional[float]
) -> Tuple[Dict[str, np.ndarray], float]:
    """Rescale all gradients when their global norm exceeds `max_norm`.

    Returns:
        (possibly rescaled gradients, norm before clipping)
    """
    norm = global_norm(grads)
    if max_norm is None or max_norm <= 0 or norm <= max_norm:
        return grads, norm
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}, norm


def adam_step(model, grads: Dict[str, np.ndarray], state: AdamState, cfg):
    """Apply one bias-corrected Adam update in place.

    Args:
        model: Any object exposing `parameters()` -> named arrays
        grads: Gradients with the same keys and shapes
        state: Moments and step count of prior updates
        cfg: TrainConfig (learning_rate, beta1, beta2, epsilon,
            gradient_clip_norm)

    Returns:
        (model, state), both updated in place

    Raises:
        ShapeError: gradient or state does not match a parameter
    """
    params = model.parameters()
    if set(grads) != set(params):
        missing = sorted(set(params) ^ set(grads))
        raise ShapeError(f"gradient keys do not match parameters: {missing}")
    for name, p in params.items():
        if grads[name].shape != p.shape:
            raise ShapeError(
                f"{name}: gradient shape {grads[name].shape} != {p.shape}"
            )
        if name not in state.m or state.m[name].shape != p.shape:
            raise ShapeError(f"{name}: Adam state does not match parameter")

    grads, _ = clip_gradients(grads, cfg.gradient_clip_norm)

    state.t += 1
    b1, b2 = cfg.beta1, cfg.beta2
    correction1 = 1.0 - b1**state.t
    correction2 = 1.0 - b2**state.t
    for name, p in params.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        p -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
    return model, state
