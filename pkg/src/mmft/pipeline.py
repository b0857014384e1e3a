"""Daily-grid feature store and aligned batches for every modality."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from mmft.datagen.generate import Dataset
from mmft.encoders.text import pad_tokens, tokenize
from mmft.errors import InputError
from mmft.timebase import align_series, align_series_asof


@dataclass
class Splits:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        for name in ("train", "val", "test"):
            if getattr(self, name).size == 0:
                raise InputError(f"empty {name} split; dataset too short")
        if not self.train.max() < self.val.min() <= self.val.max() < self.test.min():
            raise InputError("split dates overlap: need max(train) < min(val) < min(test)")

    def __getitem__(self, name: str) -> np.ndarray:
        return getattr(self, name)


@dataclass
class AlignedBatch:
    """Inputs and targets for ``B`` windows of ``T`` consecutive days."""

    symbols: np.ndarray       # [B]
    days: np.ndarray          # [B, T]
    tech: np.ndarray          # [B, T, L, 5]
    tokens: np.ndarray        # [B, T, max_tokens]
    token_mask: np.ndarray    # [B, T, max_tokens]
    macro: np.ndarray         # [B, T, macro_lookback, Q]
    staleness: np.ndarray     # [B, T, macro_lookback, Q]
    y: np.ndarray             # [B, T] standardised next-day return
    labels: np.ndarray        # [B, T] event-response class
    ret: np.ndarray           # [B, T] raw next-day log return
    loss_mask: np.ndarray     # [B, T]

    @property
    def shape(self) -> tuple:
        return self.days.shape


def make_labels(close: np.ndarray, horizon: int, up: float, down: float) -> np.ndarray:
    """0 down / 1 flat / 2 up from the forward ``horizon``-day log return; -1 where undefined."""
    log_c = np.log(close)
    fwd = np.full(close.shape, np.nan)
    fwd[:, :-horizon] = log_c[:, horizon:] - log_c[:, :-horizon]
    lab = np.where(fwd > up, 2, np.where(fwd < down, 0, 1))
    return np.where(np.isnan(fwd), -1, lab)


class FeatureStore:
    """Pre-aligned per-(symbol, day) inputs, targets and date-ordered splits.

    Standardisation statistics come from the training split only.
    """

    def __init__(self, ds: Dataset, cfg):
        self.ds = ds
        self.cfg = cfg
        self.calendar = ds.calendar
        self.symbols = list(ds.symbols)
        n_sym, n_days = len(ds.symbols), len(ds.calendar)
        self.n_symbols, self.n_days = n_sym, n_days
        if n_days < cfg.lookback + cfg.label_horizon + 10:
            raise InputError(f"dataset of {n_days} days too short for lookback {cfg.lookback}")

        close = ds.close()
        log_c = np.log(close)
        ret = np.full((n_sym, n_days), np.nan)
        ret[:, :-1] = log_c[:, 1:] - log_c[:, :-1]
        self.ret = ret
        self.labels = make_labels(close, cfg.label_horizon, cfg.up_threshold, cfg.down_threshold)

        first = cfg.lookback - 1
        last = n_days - 1 - cfg.label_horizon
        days = np.arange(first, last + 1)
        n_train = int(round(days.size * cfg.train_frac))
        n_val = int(round(days.size * cfg.val_frac))
        train = days[:n_train]
        val = days[n_train:n_train + n_val]
        test = days[n_train + n_val:]
        emb = cfg.embargo
        self.splits = Splits(train[:-emb] if emb else train, val[:-emb] if emb else val, test)

        tr = self.splits.train
        # scale without centring: a zero prediction stays the zero-return baseline
        rms = np.sqrt(np.mean(ret[:, tr] ** 2, axis=1))
        self.ret_scale = np.where(rms > 0, rms, 1.0)
        self.y = ret / self.ret_scale[:, None]

        self._build_technical(tr)
        self._build_text()
        self._build_macro(tr)
        self._build_events()

    # -- modality builders ---------------------------------------------------
    def _build_technical(self, tr: np.ndarray) -> None:
        p = self.ds.prices
        prev = np.concatenate([p[:, :1, 3], p[:, :-1, 3]], axis=1)
        close = p[:, :, 3]
        feats = np.stack([
            np.log(p[:, :, 0] / prev),
            np.log(p[:, :, 1] / close),
            np.log(p[:, :, 2] / close),
            np.log(close / prev),
            np.log(p[:, :, 4]),
        ], axis=-1)
        mu = feats[:, tr].mean(axis=1, keepdims=True)
        sd = feats[:, tr].std(axis=1, keepdims=True)
        feats = (feats - mu) / np.where(sd > 1e-12, sd, 1.0)
        lb = self.cfg.lookback
        padded = np.concatenate([np.zeros((self.n_symbols, lb - 1, 5)), feats], axis=1)
        # windows[s, t] covers days t-lb+1 .. t
        self.tech_windows = sliding_window_view(padded, lb, axis=1).transpose(0, 1, 3, 2)

    def _build_text(self) -> None:
        cfg = self.cfg
        sym_index = {s: i for i, s in enumerate(self.symbols)}
        seqs = [[0]] * (self.n_symbols * self.n_days)
        for doc in self.ds.docs:
            seqs[sym_index[doc.symbol] * self.n_days + doc.ordinal] = tokenize(
                doc.text, cfg.vocab_size, cfg.max_tokens)
        ids, mask = pad_tokens(seqs, cfg.max_tokens)
        self.tokens = ids.reshape(self.n_symbols, self.n_days, cfg.max_tokens)
        self.token_mask = mask.reshape(self.n_symbols, self.n_days, cfg.max_tokens)

    def _build_macro(self, tr: np.ndarray) -> None:
        cfg = self.cfg
        lb = cfg.macro_lookback
        vals, stales = [], []
        for s in self.ds.macro:
            v, st = align_series_asof(s, self.calendar, lb)
            known = st < 252.0
            full = align_series(s, self.calendar)
            mu, sd = full[tr].mean(), full[tr].std()
            sd = sd if sd > 1e-12 else 1.0
            vals.append(np.where(known, (v - mu) / sd, 0.0))
            stales.append(st)
        if vals:
            self.macro = np.stack(vals, axis=-1)       # [D, lb, Q]
            self.staleness = np.stack(stales, axis=-1)
        else:
            self.macro = np.zeros((self.n_days, lb, 1))
            self.staleness = np.zeros((self.n_days, lb, 1))
        self.n_indicators = self.macro.shape[-1]

    def _build_events(self) -> None:
        g = self.ds.events
        self.graph = g
        self.event_types = g.types()
        if len(self.event_types) > self.cfg.max_event_types:
            raise InputError(f"{len(self.event_types)} event types exceed max_event_types")
        lookup = {t: i for i, t in enumerate(self.event_types)}
        self.type_ids = np.array([lookup[n.type] for n in g.nodes], dtype=np.int64)
        self.timeline = g.timeline()

    # -- batching ---------------------------------------------------------
    def batch(self, symbols, starts, length: int, split: str | None = None) -> AlignedBatch:
        """Windows ``[start, start+length)`` per symbol; loss mask limited to ``split``."""
        symbols = np.asarray(symbols, dtype=np.int64)
        starts = np.asarray(starts, dtype=np.int64)
        days = starts[:, None] + np.arange(length)[None, :]
        if days.min() < 0 or days.max() >= self.n_days:
            raise InputError("batch window outside the calendar")
        s = symbols[:, None]
        y = self.y[s, days]
        labels = self.labels[s, days]
        ok = np.isfinite(y) & (labels >= 0)
        if split is not None:
            ok &= np.isin(days, self.splits[split])
        return AlignedBatch(
            symbols=symbols, days=days,
            tech=self.tech_windows[s, days],
            tokens=self.tokens[s, days], token_mask=self.token_mask[s, days],
            macro=self.macro[days], staleness=self.staleness[days],
            y=np.where(ok, y, 0.0), labels=np.where(ok, labels, 1),
            ret=np.where(ok, self.ret[s, days], 0.0), loss_mask=ok,
        )

    def train_windows(self, rng: np.random.Generator, length: int):
        """Tile the training span into windows with a random phase per symbol."""
        tr = self.splits.train
        lo, hi = int(tr.min()), int(tr.max())
        out = []
        for s in range(self.n_symbols):
            offset = int(rng.integers(0, length))
            start = lo - offset
            while start <= hi:
                st = min(max(start, 0), self.n_days - length)
                out.append((s, st))
                start += length
        return out
