"""Orthonormal Haar analysis/synthesis filter bank."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mmft.errors import DimensionError
from mmft.numerics import Tensor

_SQRT_HALF = np.sqrt(0.5)


@dataclass
class HaarBands:
    approx: np.ndarray
    details: list  # details[0] is level 1 (finest), details[-1] level K

    @property
    def levels(self) -> int:
        return len(self.details)

    def energy(self) -> float:
        return float(np.sum(self.approx ** 2) + sum(np.sum(d ** 2) for d in self.details))


def dwt_haar(x, levels: int) -> HaarBands:
    """K-level Haar DWT: pairwise ``(a+b)/sqrt2`` approximations, ``(a-b)/sqrt2`` details."""
    x = np.asarray(x, dtype=np.float64)
    if levels < 1:
        raise DimensionError("need at least one decomposition level")
    if x.ndim != 1 or x.size % (2 ** levels):
        raise DimensionError(f"length {x.size} not divisible by 2^{levels}")
    details = []
    a = x
    for _ in range(levels):
        even, odd = a[0::2], a[1::2]
        details.append((even - odd) * _SQRT_HALF)
        a = (even + odd) * _SQRT_HALF
    return HaarBands(a, details)


def idwt_haar(bands: HaarBands) -> np.ndarray:
    """Exact inverse of :func:`dwt_haar`."""
    a = np.asarray(bands.approx, dtype=np.float64)
    for d in reversed(bands.details):
        d = np.asarray(d, dtype=np.float64)
        if d.shape != a.shape:
            raise DimensionError(f"band shapes disagree: approx {a.shape} vs detail {d.shape}")
        out = np.empty(2 * a.size)
        out[0::2] = (a + d) * _SQRT_HALF
        out[1::2] = (a - d) * _SQRT_HALF
        a = out
    return a


def haar_approx(x: Tensor, level: int, axis: int = -2) -> Tensor:
    """Level-``level`` Haar approximation band of a tensor along ``axis``.

    Equivalent to ``dwt_haar(...).approx`` applied along the axis: each output
    coefficient is the block sum of ``2^level`` samples scaled by ``2^(-level/2)``.
    """
    ax = axis % x.ndim
    n = x.shape[ax]
    block = 2 ** level
    if n % block:
        raise DimensionError(f"length {n} not divisible by 2^{level}")
    shape = x.shape[:ax] + (n // block, block) + x.shape[ax + 1:]
    return x.reshape(shape).sum(axis=ax + 1) * (2.0 ** (-level / 2.0))
