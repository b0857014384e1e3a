"""Gated modality fusion, three-stage position encoding and the causal trunk."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mmft.encoders.attention import causal_mask, multi_head_attention
from mmft.errors import DimensionError
from mmft.numerics import (
    Tensor,
    as_tensor,
    concat,
    elu,
    exp,
    layer_norm,
    ones,
    softmax,
    stack,
    xavier_uniform,
    zeros,
)
from mmft.timebase import EventTimeline, TradingCalendar, enc_calendar, enc_event

N_CLASSES = 3  # down, flat, up


@dataclass
class PredictionOutput:
    y_hat: Tensor
    class_logits: Tensor

    def class_probabilities(self) -> np.ndarray:
        z = self.class_logits.data
        e = np.exp(z - z.max(axis=-1, keepdims=True))
        return e / e.sum(axis=-1, keepdims=True)


# -- dynamic gated fusion -----------------------------------------------------

def gate_weights(hs, w, active=None) -> Tensor:
    """Softmax over the four per-channel logits ``w_k . h_k``.

    ``active`` (length-4 booleans) removes ablated channels from the
    normalisation; their weight is exactly zero.
    """
    if len(hs) != w.shape[0]:
        raise DimensionError(f"{len(hs)} channels but {w.shape[0]} gate vectors")
    logits = stack([(as_tensor(h) * w[k]).sum(axis=-1) for k, h in enumerate(hs)], axis=-1)
    return softmax(logits, axis=-1, mask=None if active is None else np.asarray(active, dtype=bool))


def fuse(hs, alpha) -> Tensor:
    """Convex combination ``sum_k alpha_k h_k``."""
    alpha = as_tensor(alpha)
    shape = as_tensor(hs[0]).shape
    out = None
    for k, h in enumerate(hs):
        h = as_tensor(h)
        if h.shape != shape:
            raise DimensionError(f"channel {k} shape {h.shape} differs from {shape}")
        term = alpha[..., k:k + 1] * h
        out = term if out is None else out + term
    return out


# -- three-stage position encoding ----------------------------------------------

def posenc_patterns(d_model: int):
    """Fixed maps of the calendar (6 values), event and decay scalars to ``d_model``."""
    j = np.arange(d_model)
    cal = (j[None, :] % 6 == np.arange(6)[:, None]).astype(np.float64)
    event = np.where(j % 2 == 0, 1.0, -1.0)
    decay = np.where((j // 2) % 2 == 0, 1.0, -1.0)
    return cal, event, decay


def decay_signal(t, tl: EventTimeline, log_lambda) -> Tensor:
    """Differentiable (in lambda) version of ``timebase.enc_decay``."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    te = tl.ordinals().astype(np.float64)
    if te.size == 0:
        return Tensor(np.zeros(t.shape))
    age = t[:, None] - te[None, :]
    past = age >= 0
    lam = exp(log_lambda)
    vals = exp(lam * Tensor(-np.where(past, age, 0.0))) * past.astype(np.float64)
    return concat([vals, Tensor(np.zeros((t.size, 1)))], axis=-1).max(axis=-1)


def pos_enc(t, tl: EventTimeline, params: dict, cal: TradingCalendar, sigma: float,
            causal: bool = True) -> Tensor:
    """``gamma_1 Enc_cal + gamma_2 Enc_event + gamma_3 Enc_decay`` in ``d_model`` space.

    ``t`` is a day ordinal or array of ordinals; output is ``[d]`` or ``[D, d]``.
    """
    scalar = np.ndim(t) == 0
    t_arr = np.atleast_1d(np.asarray(t, dtype=np.int64))
    gamma = params["posenc.gamma"]
    d_model = params["fusion.gate.w"].shape[1]
    p_cal, p_ev, p_dec = posenc_patterns(d_model)
    cal_part = Tensor(enc_calendar(t_arr, cal) @ p_cal)
    ev = np.atleast_1d(enc_event(t_arr, tl, sigma, causal=causal))
    dec = decay_signal(t_arr, tl, params["posenc.log_lambda"])
    out = (gamma[0:1] * cal_part
           + gamma[1:2] * Tensor(ev[:, None] * p_ev[None, :])
           + gamma[2:3] * (dec.reshape(-1, 1) * p_dec[None, :]))
    return out.reshape(d_model) if scalar else out


# -- time-aligned transformer trunk -------------------------------------------

def init_fusion(rng: np.random.Generator, cfg) -> dict:
    d = cfg.d_model
    p = {
        # zero gate vectors start every channel at weight 1/4; random ones saturate the
        # softmax against large-norm channels and starve them of gradient
        "fusion.gate.w": zeros((4, d)),
        "fusion.null": zeros((4, d)),
        # calendar weight starts at zero: a year-phase signal fitted on a short history
        # extrapolates badly, so the model has to earn it
        "posenc.gamma": Tensor(np.array([0.0, 1.0, 1.0]), requires_grad=True),
        "posenc.log_lambda": Tensor(np.log(cfg.lambda_init), requires_grad=True),
        "head.reg.w": zeros((d, 1)),
        "head.reg.b": zeros((1,)),
        "head.cls.w": xavier_uniform((d, N_CLASSES), rng),
        "head.cls.b": zeros((N_CLASSES,)),
    }
    p.update(init_trunk(rng, cfg))
    return p


def init_trunk(rng: np.random.Generator, cfg) -> dict:
    d = cfg.d_model
    hdim = cfg.ffn_mult * d
    p = {}
    for layer in range(cfg.layers):
        pre = f"trunk.{layer}"
        p[f"{pre}.ln1.g"], p[f"{pre}.ln1.b"] = ones((d,)), zeros((d,))
        for name in ("wq", "wk", "wv", "wo"):
            p[f"{pre}.attn.{name}"] = xavier_uniform((d, d), rng)
        p[f"{pre}.ln2.g"], p[f"{pre}.ln2.b"] = ones((d,)), zeros((d,))
        p[f"{pre}.ff1.w"], p[f"{pre}.ff1.b"] = xavier_uniform((d, hdim), rng), zeros((hdim,))
        p[f"{pre}.ff2.w"], p[f"{pre}.ff2.b"] = xavier_uniform((hdim, d), rng), zeros((d,))
    return p


def trunk_forward(seq, params: dict, layers: int, heads: int) -> Tensor:
    """Pre-norm causal transformer blocks over ``[..., T, d]``; no final norm."""
    x = as_tensor(seq)
    t = x.shape[-2]
    if t < 1:
        raise DimensionError("trunk needs at least one position")
    mask = causal_mask(t)
    for layer in range(layers):
        pre = f"trunk.{layer}"
        h = layer_norm(x, params[f"{pre}.ln1.g"], params[f"{pre}.ln1.b"])
        x = x + multi_head_attention(h, h, params, f"{pre}.attn", heads, mask=mask)
        h = layer_norm(x, params[f"{pre}.ln2.g"], params[f"{pre}.ln2.b"])
        h = elu(h @ params[f"{pre}.ff1.w"] + params[f"{pre}.ff1.b"])
        x = x + h @ params[f"{pre}.ff2.w"] + params[f"{pre}.ff2.b"]
    return x


def predict(trunk_out, params: dict) -> PredictionOutput:
    """Affine regression and classification heads applied to every position given."""
    x = as_tensor(trunk_out)
    single = x.ndim == 1
    if single:
        x = x.reshape(1, -1)
    y = (x @ params["head.reg.w"] + params["head.reg.b"])
    y = y.reshape(y.shape[:-1])
    logits = x @ params["head.cls.w"] + params["head.cls.b"]
    if single:
        y, logits = y.reshape(()), logits.reshape(N_CLASSES)
    return PredictionOutput(y, logits)
