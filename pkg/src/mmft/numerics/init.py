"""Parameter initialisers (Xavier-uniform weights, zero biases)."""

from __future__ import annotations

import numpy as np

from mmft.numerics.tensor import Tensor


def xavier_uniform(shape, rng: np.random.Generator) -> Tensor:
    """Glorot-uniform; for ndim > 2 the leading axes count as receptive field."""
    shape = tuple(shape)
    if len(shape) == 1:
        fan_in = fan_out = shape[0]
    else:
        receptive = int(np.prod(shape[:-2])) if len(shape) > 2 else 1
        fan_in = shape[-2] * receptive
        fan_out = shape[-1] * receptive
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=shape), requires_grad=True)


def zeros(shape) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True)


def ones(shape) -> Tensor:
    return Tensor(np.ones(shape), requires_grad=True)
