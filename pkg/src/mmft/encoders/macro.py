"""Mixed-frequency LSTM over the daily-aligned macro panel."""

from __future__ import annotations

import numpy as np

from mmft.errors import DimensionError
from mmft.numerics import Tensor, as_tensor, sigmoid, tanh, xavier_uniform, zeros


def init_macro(rng: np.random.Generator, cfg, n_indicators: int) -> dict:
    hdim = cfg.macro_hidden
    return {
        "macro.lstm.wx": xavier_uniform((n_indicators, 4 * hdim), rng),
        "macro.lstm.wh": xavier_uniform((hdim, 4 * hdim), rng),
        "macro.lstm.b": zeros((4 * hdim,)),
        "macro.proj.w": xavier_uniform((hdim, cfg.d_model), rng),
        "macro.proj.b": zeros((cfg.d_model,)),
    }


def recency_weight(staleness, rho: float) -> np.ndarray:
    return np.exp(-rho * np.asarray(staleness, dtype=np.float64))


def mf_lstm_step(x, state, params: dict, staleness=None, rho: float = 0.0):
    """One LSTM step; inputs are first scaled by ``exp(-rho * staleness)``.

    Gate layout in the stacked weights is input, forget, candidate, output.
    """
    c, h = (as_tensor(s) for s in state)
    x = as_tensor(x)
    wx, wh, b = params["macro.lstm.wx"], params["macro.lstm.wh"], params["macro.lstm.b"]
    hdim = wh.shape[0]
    if x.shape[-1] != wx.shape[0] or c.shape[-1] != hdim or h.shape[-1] != hdim:
        raise DimensionError(f"LSTM shapes: x {x.shape}, c {c.shape}, h {h.shape}, hidden {hdim}")
    if staleness is not None:
        x = x * recency_weight(staleness, rho)
    single = x.ndim == 1
    if single:
        x, c, h = x.reshape(1, -1), c.reshape(1, -1), h.reshape(1, -1)
    z = x @ wx + h @ wh + b
    i = sigmoid(z[:, 0 * hdim:1 * hdim])
    f = sigmoid(z[:, 1 * hdim:2 * hdim])
    g = tanh(z[:, 2 * hdim:3 * hdim])
    o = sigmoid(z[:, 3 * hdim:4 * hdim])
    c_new = f * c + i * g
    h_new = o * tanh(c_new)
    if single:
        return c_new.reshape(hdim), h_new.reshape(hdim)
    return c_new, h_new


def encode_macro(panel, params: dict, staleness=None, rho: float = 0.0) -> Tensor:
    """Run the LSTM over the lookback axis and project the final hidden state.

    ``panel`` is ``[lookback, Q]`` or ``[B, lookback, Q]``; ``staleness`` matches.
    """
    x = as_tensor(panel)
    single = x.ndim == 2
    if single:
        x = x.reshape((1,) + x.shape)
        staleness = None if staleness is None else np.asarray(staleness)[None]
    b, steps, _ = x.shape
    hdim = params["macro.lstm.wh"].shape[0]
    c = Tensor(np.zeros((b, hdim)))
    h = Tensor(np.zeros((b, hdim)))
    for s in range(steps):
        st = None if staleness is None else staleness[:, s, :]
        c, h = mf_lstm_step(x[:, s, :], (c, h), params, st, rho)
    out = h @ params["macro.proj.w"] + params["macro.proj.b"]
    return out.reshape(out.shape[-1]) if single else out
