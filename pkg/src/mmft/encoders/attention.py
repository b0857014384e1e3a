"""Scaled dot-product attention building blocks."""

from __future__ import annotations

import numpy as np

from mmft.errors import DimensionError
from mmft.numerics import Tensor, as_tensor, softmax


def cross_attention(q, k, v, mask=None) -> Tensor:
    """``softmax(q k^T / sqrt(d_k)) v``; ``mask`` marks admissible keys."""
    q, k, v = as_tensor(q), as_tensor(k), as_tensor(v)
    if q.shape[-1] != k.shape[-1]:
        raise DimensionError(f"query/key widths differ: {q.shape} vs {k.shape}")
    if k.shape[-2] != v.shape[-2]:
        raise DimensionError(f"key/value counts differ: {k.shape} vs {v.shape}")
    scores = (q @ k.swapaxes(-1, -2)) * (1.0 / np.sqrt(q.shape[-1]))
    return softmax(scores, axis=-1, mask=mask) @ v


def _split_heads(x: Tensor, heads: int) -> Tensor:
    *lead, t, d = x.shape
    return x.reshape(tuple(lead) + (t, heads, d // heads)).swapaxes(-2, -3)


def _merge_heads(x: Tensor) -> Tensor:
    *lead, h, t, dh = x.shape
    return x.swapaxes(-2, -3).reshape(tuple(lead) + (t, h * dh))


def multi_head_attention(xq, xkv, p: dict, prefix: str, heads: int, mask=None) -> Tensor:
    """Multi-head attention with projections ``{prefix}.wq/wk/wv/wo``.

    ``mask`` broadcasts against ``[..., heads, T_q, T_k]``.
    """
    d = xq.shape[-1]
    if d % heads:
        raise DimensionError(f"width {d} not divisible by {heads} heads")
    q = _split_heads(xq @ p[f"{prefix}.wq"], heads)
    k = _split_heads(xkv @ p[f"{prefix}.wk"], heads)
    v = _split_heads(xkv @ p[f"{prefix}.wv"], heads)
    return _merge_heads(cross_attention(q, k, v, mask=mask)) @ p[f"{prefix}.wo"]


def causal_mask(t: int) -> np.ndarray:
    return np.tril(np.ones((t, t), dtype=bool))


def sinusoid_positions(t: int, d: int) -> np.ndarray:
    pos = np.arange(t)[:, None]
    i = np.arange(d)[None, :]
    ang = pos / np.power(10000.0, (2 * (i // 2)) / d)
    return np.where(i % 2 == 0, np.sin(ang), np.cos(ang))
