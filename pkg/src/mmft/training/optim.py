"""Plain gradient descent and Adam over named parameter arrays."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mmft.errors import ParameterError


def gd_step(params: dict, grads: dict, eta: float) -> dict:
    """``theta - eta * grad`` for every named array; inputs are not modified."""
    if eta <= 0:
        raise ParameterError("learning rate must be > 0")
    return {n: np.asarray(p) - eta * np.asarray(grads[n]) for n, p in params.items()}


@dataclass
class AdamState:
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lr <= 0:
            raise ParameterError("learning rate must be > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ParameterError("Adam betas must lie in [0, 1)")


def adam_step(params: dict, grads: dict, state: AdamState):
    """Bias-corrected adaptive-moment update. Returns ``(params', state)``; the state is updated in place."""
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    new = {}
    for n, p in params.items():
        g = np.asarray(grads[n], dtype=np.float64)
        m = state.m.get(n)
        v = state.v.get(n)
        m = (1 - b1) * g if m is None else b1 * m + (1 - b1) * g
        v = (1 - b2) * g * g if v is None else b2 * v + (1 - b2) * g * g
        state.m[n], state.v[n] = m, v
        new[n] = np.asarray(p) - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return new, state


def clip_by_global_norm(grads: dict, max_norm: float) -> tuple[dict, float]:
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / norm
        return {n: g * scale for n, g in grads.items()}, norm
    return grads, norm
