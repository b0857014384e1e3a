"""Causal dilated 1-D convolution."""

from __future__ import annotations

from mmft.errors import DimensionError, ParameterError
from mmft.numerics import Tensor, as_tensor, pad_left


def dilated_conv(x, w, d: int, bias=None) -> Tensor:
    """``out[t] = sum_j x[t - j*d] @ w[j]`` with zero history before the start.

    ``x`` is ``[..., L, C_in]``, ``w`` is ``[kernel, C_in, C_out]``.
    """
    if d < 1:
        raise ParameterError(f"dilation must be >= 1, got {d}")
    x, w = as_tensor(x), as_tensor(w)
    if w.ndim != 3 or x.shape[-1] != w.shape[1]:
        raise DimensionError(f"conv shapes incompatible: x {x.shape}, w {w.shape}")
    kernel = w.shape[0]
    length = x.shape[-2]
    xp = pad_left(x, (kernel - 1) * d, axis=-2)
    out = None
    for j in range(kernel):
        start = (kernel - 1 - j) * d
        tap = xp[..., start:start + length, :] @ w[j]
        out = tap if out is None else out + tap
    if bias is not None:
        out = out + bias
    return out
