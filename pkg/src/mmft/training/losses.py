"""Regression, focal and combined dual-task losses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mmft.errors import DimensionError, InputError, ParameterError
from mmft.numerics import Tensor, as_tensor, exp, log_softmax, power, tsum


@dataclass(frozen=True)
class LossWeights:
    lambda_reg: float = 1.0
    lambda_cls: float = 1.0
    focal_alpha: float = 0.25
    focal_gamma: float = 2.0

    def __post_init__(self):
        for name in ("lambda_reg", "lambda_cls", "focal_alpha", "focal_gamma"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0")

    @classmethod
    def from_config(cls, cfg) -> "LossWeights":
        return cls(cfg.lambda_reg, cfg.lambda_cls, cfg.focal_alpha, cfg.focal_gamma)


def _weights(mask, shape):
    if mask is None:
        return np.ones(shape), float(np.prod(shape))
    w = np.broadcast_to(np.asarray(mask, dtype=np.float64), shape)
    return w, float(w.sum())


def l2_loss(pred, target, mask=None) -> Tensor:
    """Mean squared error, optionally over the entries where ``mask`` is set."""
    pred = as_tensor(pred)
    target = np.asarray(target.data if isinstance(target, Tensor) else target, dtype=np.float64)
    if pred.shape != target.shape:
        raise DimensionError(f"prediction shape {pred.shape} vs target {target.shape}")
    w, n = _weights(mask, pred.shape)
    if n == 0:
        raise InputError("l2_loss over zero entries")
    diff = pred - target
    return tsum(diff * diff * w) * (1.0 / n)


def focal_loss(logits, labels, alpha: float = 0.25, gamma: float = 2.0, mask=None) -> Tensor:
    """``-alpha (1 - p_t)^gamma log p_t`` averaged over samples.

    ``logits`` is ``[..., 3]`` and ``labels`` holds matching class ids.
    """
    logits = as_tensor(logits)
    labels = np.asarray(labels)
    k = logits.shape[-1]
    if labels.shape != logits.shape[:-1]:
        raise DimensionError(f"labels shape {labels.shape} vs logits {logits.shape}")
    if not np.issubdtype(labels.dtype, np.integer) or labels.min(initial=0) < 0 or labels.max(initial=0) >= k:
        raise InputError(f"labels must be integer class ids in [0, {k})")
    onehot = np.eye(k)[labels]
    logp_t = tsum(log_softmax(logits, axis=-1) * onehot, axis=-1)
    p_t = exp(logp_t)
    per = power(1.0 - p_t, gamma) * logp_t * (-alpha) if gamma else logp_t * (-alpha)
    w, n = _weights(mask, labels.shape)
    if n == 0:
        raise InputError("focal_loss over zero samples")
    return tsum(per * w) * (1.0 / n)


def total_loss(out, y, labels, lw: LossWeights, mask=None) -> Tensor:
    """``lambda_reg * l2 + lambda_cls * focal`` over the masked positions."""
    terms = []
    if lw.lambda_reg:
        terms.append(l2_loss(out.y_hat, y, mask) * lw.lambda_reg)
    if lw.lambda_cls:
        terms.append(focal_loss(out.class_logits, labels, lw.focal_alpha, lw.focal_gamma, mask) * lw.lambda_cls)
    if not terms:
        return Tensor(0.0)
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    return total
