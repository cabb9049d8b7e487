"""Adam with bias correction and decoupled weight decay."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import ShapeMismatch, Tensor


@dataclass
class AdamState:
    learning_rate: float
    eps: float = 1e-8
    weight_decay: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    step_count: int = 0
    moments1: list[np.ndarray] = field(default_factory=list)
    moments2: list[np.ndarray] = field(default_factory=list)


def adam_step(state: AdamState, params: list[Tensor], grads: list[np.ndarray] | None = None) -> list[Tensor]:
    """One in-place Adam update. Decoupled weight decay shrinks parameters
    before the moment-based delta; zero gradients leave parameters alone
    only when weight decay is zero."""
    if grads is None:
        grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in params]
    if len(grads) != len(params):
        raise ShapeMismatch(f"{len(params)} params but {len(grads)} grads")
    if not state.moments1:
        state.moments1 = [np.zeros_like(p.data) for p in params]
        state.moments2 = [np.zeros_like(p.data) for p in params]
    state.step_count += 1
    t = state.step_count
    bias1 = 1.0 - state.beta1 ** t
    bias2 = 1.0 - state.beta2 ** t
    for p, g, m, v in zip(params, grads, state.moments1, state.moments2):
        if g.shape != p.data.shape:
            raise ShapeMismatch(f"grad {g.shape} vs param {p.data.shape}")
        if state.weight_decay:
            p.data -= state.learning_rate * state.weight_decay * p.data
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p.data -= state.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + state.eps)
    return params
