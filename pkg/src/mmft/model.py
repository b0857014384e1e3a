"""The full multi-modal forecaster over aligned batches."""

from __future__ import annotations

import numpy as np

from mmft.config import CHANNELS, RunConfig
from mmft.encoders import (
    NULL_TOKEN,
    encode_macro,
    encode_technical,
    encode_text,
    event2vec,
    init_event,
    init_macro,
    init_technical,
    init_text,
)
from mmft.errors import ConfigError
from mmft.fusion import PredictionOutput, fuse, gate_weights, init_fusion, pos_enc, predict, trunk_forward
from mmft.numerics import Tensor, no_grad
from mmft.params import ModelParams
from mmft.pipeline import AlignedBatch, FeatureStore


def check_channels(drop) -> tuple:
    drop = tuple(drop)
    for tag in drop:
        if tag not in CHANNELS:
            raise ConfigError(f"unknown channel tag {tag!r}; expected one of {', '.join(CHANNELS)}")
    return drop


def init_params(cfg: RunConfig, n_indicators: int, seed: int | None = None) -> ModelParams:
    """Fresh parameters; each block draws from its own child stream of the seed."""
    seed = cfg.seed if seed is None else seed
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(5)]
    params = ModelParams()
    params.update(init_technical(streams[0], cfg))
    params.update(init_text(streams[1], cfg))
    params.update(init_macro(streams[2], cfg, n_indicators))
    params.update(init_event(streams[3], cfg))
    params.update(init_fusion(streams[4], cfg))
    return params


class MMFTModel:
    """Parameters plus the data context (graph, calendar, indicators) they run on."""

    def __init__(self, cfg: RunConfig, params: ModelParams, store: FeatureStore, drop=()):
        self.cfg = cfg
        self.params = params
        self.store = store
        self.drop = check_channels(drop)

    @classmethod
    def init(cls, cfg: RunConfig, store: FeatureStore, seed: int | None = None, drop=None):
        params = init_params(cfg, store.n_indicators, seed)
        return cls(cfg, params, store, cfg.drop if drop is None else drop)

    # -- channels ---------------------------------------------------------------
    def channel_outputs(self, batch: AlignedBatch, exclude=()) -> list:
        """``[h_T, h_F, h_M, h_E]`` each ``[B, T, d]``; dropped channels get the null vector."""
        cfg, p, st = self.cfg, self.params, self.store
        b, t = batch.shape
        d = cfg.d_model
        null = p["fusion.null"]
        blank = Tensor(np.zeros((b, t, d)))
        hs = [null[k] + blank for k in range(len(CHANNELS))]
        uniq, inv = np.unique(batch.days, return_inverse=True)
        inv = np.asarray(inv).reshape(-1)

        if "T" not in self.drop:
            tech = batch.tech.reshape((b * t,) + batch.tech.shape[2:])
            hs[0] = encode_technical(tech, p, cfg.wavelet_levels).reshape(b, t, d)
        if "F" not in self.drop:
            tokens = batch.tokens.reshape(b * t, -1)
            tmask = batch.token_mask.reshape(b * t, -1)
            # A lone null token is the only key, so its output ignores the query:
            # encode those positions once and share the row.
            has_doc = (tmask.sum(axis=1) > 1) | (tokens[:, 0] != NULL_TOKEN)
            rows = np.flatnonzero(has_doc)
            blank_row = np.flatnonzero(~has_doc)[:1]
            pick = np.concatenate([rows, blank_row])
            query = hs[0].reshape(b * t, d)[pick]
            out = encode_text(tokens[pick], query, p, cfg.text_heads, mask=tmask[pick])
            where = np.full(b * t, rows.size)
            where[rows] = np.arange(rows.size)
            hs[1] = out[where].reshape(b, t, d)
        if "M" not in self.drop:
            out = encode_macro(st.macro[uniq], p, st.staleness[uniq], cfg.macro_rho)
            hs[2] = out[inv].reshape(b, t, d)
        if "E" not in self.drop:
            out = event2vec(st.graph, uniq, p, st.type_ids, exclude=exclude)
            hs[3] = out[inv].reshape(b, t, d)
        return hs

    def forward(self, batch: AlignedBatch, exclude=()) -> PredictionOutput:
        cfg, p = self.cfg, self.params
        b, t = batch.shape
        hs = self.channel_outputs(batch, exclude)
        active = np.array([c not in self.drop for c in CHANNELS])
        alpha = gate_weights(hs, p["fusion.gate.w"], active=active)
        fused = fuse(hs, alpha)
        uniq, inv = np.unique(batch.days, return_inverse=True)
        timeline = self.store.timeline
        for node_id in exclude:
            timeline = timeline.without(node_id)
        pe = pos_enc(uniq, timeline, p, self.store.calendar, cfg.sigma, causal=cfg.pos_enc_causal)
        seq = fused + pe[np.asarray(inv).reshape(-1)].reshape(b, t, cfg.d_model)
        return predict(trunk_forward(seq, p, cfg.layers, cfg.heads), p)

    # -- inference over whole date ranges -----------------------------------
    def predict_days(self, days, exclude=(), symbols=None) -> dict:
        """Predictions for every symbol on each of ``days``.

        Windows of ``seq_len`` advance by half a window; each day is read from
        the latest window that holds it in its second half (or the first
        window), so every prediction sees at least half a window of context.
        Returns ``{"y_std", "y_raw", "probs"}`` arrays of shape ``[S, len(days)]``
        (``probs`` has a trailing class axis).
        """
        st = self.store
        days = np.asarray(days, dtype=np.int64)
        symbols = np.arange(st.n_symbols) if symbols is None else np.asarray(symbols)
        length = min(self.cfg.seq_len, st.n_days)
        hop = max(1, length // 2)
        lo, hi = int(days.min()), int(days.max())
        starts = []
        s = max(0, lo - hop)
        while True:
            s = min(s, st.n_days - length)
            starts.append(s)
            if s + length - 1 >= hi:
                break
            s += hop
        y_std = np.zeros((symbols.size, st.n_days))
        probs = np.zeros((symbols.size, st.n_days, 3))
        pairs = [(si, s0) for si in range(symbols.size) for s0 in starts]
        bs = max(1, self.cfg.batch_size)
        with no_grad():
            for k in range(0, len(pairs), bs):
                chunk = pairs[k:k + bs]
                batch = st.batch(symbols[[c[0] for c in chunk]], [c[1] for c in chunk], length)
                out = self.forward(batch, exclude)
                yh, pr = out.y_hat.data, out.class_probabilities()
                for row, (si, s0) in enumerate(chunk):
                    first = 0 if s0 == starts[0] else hop
                    sl = slice(s0 + first, s0 + length)
                    y_std[si, sl] = yh[row, first:]
                    probs[si, sl] = pr[row, first:]
        y_std, probs = y_std[:, days], probs[:, days]
        y_raw = y_std * st.ret_scale[symbols, None]
        return {"y_std": y_std, "y_raw": y_raw, "probs": probs}
