"""Technical-indicator channel: dilated causal convolutions feeding Haar bands."""

from __future__ import annotations

import numpy as np

from mmft.encoders.conv import dilated_conv
from mmft.encoders.wavelet import haar_approx
from mmft.errors import DimensionError
from mmft.numerics import Tensor, as_tensor, concat, tanh, xavier_uniform, zeros

N_FEATURES = 5  # open, high, low, close, volume


def init_technical(rng: np.random.Generator, cfg) -> dict:
    p = {}
    c = cfg.tech_channels
    for k in range(1, cfg.wavelet_levels + 1):
        p[f"tech.conv{k}.w"] = xavier_uniform((cfg.tech_kernel, N_FEATURES, c), rng)
        p[f"tech.conv{k}.b"] = zeros((c,))
        p[f"tech.proj{k}.w"] = xavier_uniform((2 * c, cfg.d_model), rng)
        p[f"tech.proj{k}.b"] = zeros((cfg.d_model,))
    return p


def encode_technical(win, params: dict, levels: int) -> Tensor:
    """Sum over levels k of a projection of the level-k band of a dilated conv.

    Level ``k`` convolves with dilation ``2^(k-1)``, takes the level-``k`` Haar
    approximation of the result, pools it (band mean and most recent
    coefficient) and projects to ``d_model``. ``win`` is ``[L, 5]`` or
    ``[..., L, 5]``; the output drops the ``L`` axis.
    """
    x = as_tensor(win)
    if x.shape[-1] != N_FEATURES:
        raise DimensionError(f"technical window needs {N_FEATURES} columns, got {x.shape}")
    if x.shape[-2] % (2 ** levels):
        raise DimensionError(f"lookback {x.shape[-2]} not a multiple of 2^{levels}")
    single = x.ndim == 2
    if single:
        x = x.reshape((1,) + x.shape)
    out = None
    for k in range(1, levels + 1):
        z = tanh(dilated_conv(x, params[f"tech.conv{k}.w"], 2 ** (k - 1), params[f"tech.conv{k}.b"]))
        band = haar_approx(z, k, axis=-2)
        pooled = concat([band.mean(axis=-2), band[..., -1, :]], axis=-1)
        term = pooled @ params[f"tech.proj{k}.w"] + params[f"tech.proj{k}.b"]
        out = term if out is None else out + term
    return out.reshape(out.shape[1:]) if single else out
