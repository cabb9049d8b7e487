"""Central finite-difference verification of tape gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .autodiff import Tensor, backward


def finite_difference_check(
    build_loss: Callable[[], Tensor],
    params: list[Tensor],
    h: float = 1e-5,
    zero_floor: float = 1e-8,
) -> float:
    """Largest relative error between tape gradients and central differences.

    ``build_loss`` must rebuild the scalar loss from the parameters' current
    ``data`` (dropout and sampling inside it must be seeded, so the function
    is deterministic). Entries where both gradient estimates are below
    ``zero_floor`` count as exact.
    """
    loss = build_loss()
    backward(loss)
    grads = []
    for p in params:
        grads.append(np.zeros_like(p.data) if p.grad is None else p.grad.copy())
        p.grad = None
    worst = 0.0
    for p, g in zip(params, grads):
        flat = p.data.reshape(-1)
        g_flat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = build_loss().item()
            flat[i] = orig - h
            down = build_loss().item()
            flat[i] = orig
            fd = (up - down) / (2.0 * h)
            denom = max(abs(fd), abs(g_flat[i]))
            if denom < zero_floor:
                continue
            worst = max(worst, abs(fd - g_flat[i]) / denom)
    return worst
