"""Deterministic multi-modal market simulator with a ground-truth effect ledger.

Daily log returns per symbol are the sum of four planted components::

    r_t = macro_loading * f_t
        + sum_e event_scale * beta_e * exp(-lambda_e (t - t_e)) * [t >= t_e]
        + text_scale * text_strength * z_{t-1}
        + eps_t

``f`` is a unit-variance AR(1) factor observed quarterly (and monthly with
noise), ``z_{t-1}`` the sentiment sign of the symbol's document published on
the previous trading day, and ``eps`` Gaussian noise. Events are market-wide.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass

import numpy as np

from mmft.encoders.graph import EventGraph, EventNode
from mmft.errors import ParameterError
from mmft.timebase import RawSeries, TradingCalendar, calendar_from_start

# Half-life giving a 10%-of-peak duration of 63 trading days.
DEFAULT_HALF_LIFE = 63.0 * math.log(2.0) / math.log(10.0)
# Days between a document or event and the first return it moves.
IMPACT_LAG = 1

POSITIVE_WORDS = ("surge", "beat", "upgrade", "outperform", "record", "expansion")
NEGATIVE_WORDS = ("plunge", "miss", "downgrade", "underperform", "lawsuit", "default")
FILLER_WORDS = (
    "company", "quarter", "report", "board", "shares", "market", "guidance", "sector",
    "revenue", "announcement", "investors", "analysts", "meeting", "statement", "filing",
    "dividend", "capital", "operations", "segment", "management", "outlook", "industry",
    "customers", "supply", "pricing", "contract", "production", "region", "costs", "plan",
)


@dataclass(frozen=True)
class EventTypeSpec:
    name: str
    beta: float
    half_life: float = DEFAULT_HALF_LIFE
    count: int = 3

    @property
    def decay_rate(self) -> float:
        return math.log(2.0) / self.half_life


# Average impact coefficients of the four ranked event types.
APPENDIX_B_TYPES = (
    EventTypeSpec("monetary_policy_adjustment", 0.89),
    EventTypeSpec("trade_policy_change", 0.85),
    EventTypeSpec("new_industry_regulation", 0.78),
    EventTypeSpec("international_conflict", 0.72),
)


@dataclass(frozen=True)
class GenSpec:
    seed: int = 0
    n_symbols: int = 8
    n_days: int = 1000
    start: str = "2015-01-05"
    lookback: int = 32
    event_types: tuple = APPENDIX_B_TYPES
    planted_events: tuple = ()        # (type_name, ordinal) pairs placed exactly
    event_scale: float = 0.004
    event_feature_dim: int = 4
    event_feature_noise: float = 0.1  # spread of node features around their type's prototype
    related_edge_prob: float = 0.1
    text_strength: float = 1.0
    text_scale: float = 0.01
    doc_prob: float = 0.4
    neutral_doc_prob: float = 0.2
    macro_loading: float = 0.002
    macro_phi: float = 0.99
    quarter_days: int = 63
    month_days: int = 21
    noise: float = 0.005
    base_price: float = 100.0

    def __post_init__(self):
        types = tuple(t if isinstance(t, EventTypeSpec) else EventTypeSpec(**t) for t in self.event_types)
        object.__setattr__(self, "event_types", types)
        object.__setattr__(self, "planted_events", tuple((str(a), int(b)) for a, b in self.planted_events))
        self.validate()

    def validate(self) -> None:
        if self.n_symbols < 1:
            raise ParameterError("n_symbols must be >= 1")
        if self.n_days < self.lookback:
            raise ParameterError(f"n_days {self.n_days} shorter than lookback {self.lookback}")
        names = [t.name for t in self.event_types]
        if len(set(names)) != len(names):
            raise ParameterError("duplicate event type name")
        for t in self.event_types:
            if not -1.0 <= t.beta <= 1.0:
                raise ParameterError(f"event type {t.name}: beta {t.beta} outside [-1, 1]")
            if not t.half_life > 0 or t.count < 0:
                raise ParameterError(f"event type {t.name}: bad half-life or count")
        for name, day in self.planted_events:
            if name not in names:
                raise ParameterError(f"planted event of unknown type {name!r}")
            if not 0 <= day < self.n_days:
                raise ParameterError(f"planted event day {day} outside [0, {self.n_days})")
        for name in ("noise", "text_strength", "text_scale", "event_scale", "doc_prob",
                     "neutral_doc_prob", "related_edge_prob", "event_feature_noise"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be non-negative")
        if not -1.0 <= self.macro_loading <= 1.0:
            raise ParameterError("macro_loading outside [-1, 1]")
        if not 0 <= self.macro_phi < 1:
            raise ParameterError("macro_phi must lie in [0, 1)")
        if self.doc_prob > 1 or self.neutral_doc_prob > 1 or self.related_edge_prob > 1:
            raise ParameterError("probabilities must not exceed 1")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["event_types"] = [dataclasses.asdict(t) for t in self.event_types]
        d["planted_events"] = [list(p) for p in self.planted_events]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GenSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown GenSpec keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class Document:
    ordinal: int
    symbol: str
    text: str


@dataclass
class Dataset:
    calendar: TradingCalendar
    symbols: list
    prices: np.ndarray                 # [S, D, 5]: open, high, low, close, volume
    macro: list                        # RawSeries, one per indicator
    docs: list                         # Document records sorted by (ordinal, symbol)
    events: EventGraph
    ledger: dict | None = None

    @property
    def n_days(self) -> int:
        return len(self.calendar)

    def close(self) -> np.ndarray:
        return self.prices[:, :, 3]

    def equals(self, other: "Dataset") -> bool:
        return (
            self.calendar.days == other.calendar.days
            and list(self.symbols) == list(other.symbols)
            and self.prices.shape == other.prices.shape
            and np.array_equal(self.prices, other.prices)
            and self.macro == other.macro
            and list(self.docs) == list(other.docs)
            and self.events == other.events
            and self.ledger == other.ledger
        )


def _ohlcv(close: np.ndarray, returns: np.ndarray, noise: np.ndarray, base: float) -> np.ndarray:
    prev = np.concatenate([[base], close[:-1]])
    spread = np.abs(noise)
    high = np.maximum(prev, close) * (1.0 + spread)
    low = np.minimum(prev, close) * (1.0 - spread)
    volume = 1e6 * (1.0 + 50.0 * np.abs(returns))
    return np.stack([prev, high, low, close, volume], axis=-1)


def event_component(events: list, n_days: int) -> np.ndarray:
    """Market-wide event contribution to daily log returns, from ledger records.

    ``out[t]`` is part of the return into day ``t``; an event dated ``t_e`` first moves
    the return into ``t_e + IMPACT_LAG``, so it is news before it is a price change.
    """
    out = np.zeros(n_days)
    t = np.arange(n_days)
    for ev in events:
        age = t - ev["ordinal"] - IMPACT_LAG
        past = age >= 0
        out += np.where(past, ev["scale"] * ev["beta"] * np.exp(-ev["decay_rate"] * np.where(past, age, 0)), 0.0)
    return out


def close_from_components(base_prices, components: dict, events: list) -> np.ndarray:
    ev = event_component(events, np.asarray(components["noise"]).shape[1])
    r = (np.asarray(components["macro"]) + np.asarray(components["text"])
         + np.asarray(components["noise"]) + ev[None, :])
    return np.asarray(base_prices)[:, None] * np.exp(np.cumsum(r, axis=1))


def resimulate(ledger: dict) -> np.ndarray:
    """Close prices ``[S, D]`` rebuilt from the ledger alone."""
    return close_from_components(ledger["base_prices"], ledger["components"], ledger["events"])


def _document(rng: np.random.Generator, sentiment: int, strength: float) -> str:
    words = list(rng.choice(FILLER_WORDS, size=6, replace=True))
    if sentiment and strength > 0:
        pool = POSITIVE_WORDS if sentiment > 0 else NEGATIVE_WORDS
        words += list(rng.choice(pool, size=max(1, int(round(3 * strength))), replace=True))
    rng.shuffle(words)
    return " ".join(str(w) for w in words)


def sentiment_score(text: str) -> int:
    """Planted positive minus negative word count of a document."""
    words = text.lower().split()
    return sum(w in POSITIVE_WORDS for w in words) - sum(w in NEGATIVE_WORDS for w in words)


def generate(spec: GenSpec) -> Dataset:
    """Simulate every modality; identical specs give identical datasets."""
    spec.validate()
    n, s_count = spec.n_days, spec.n_symbols
    cal = calendar_from_start(spec.start, n)
    seeds = np.random.SeedSequence(spec.seed).spawn(2 + s_count)
    macro_rng = np.random.default_rng(seeds[0])
    event_rng = np.random.default_rng(seeds[1])
    sym_rngs = [np.random.default_rng(s) for s in seeds[2:]]
    symbols = [f"S{i:02d}" for i in range(s_count)]

    # macro factor, unit stationary variance
    shocks = macro_rng.normal(size=n)
    f = np.zeros(n)
    scale = math.sqrt(1.0 - spec.macro_phi ** 2)
    for t in range(1, n):
        f[t] = spec.macro_phi * f[t - 1] + scale * shocks[t]
    q_days = np.arange(0, n, spec.quarter_days)
    m_days = np.arange(0, n, spec.month_days)
    cpi_noise = macro_rng.normal(scale=0.3, size=m_days.size)
    macro = [
        RawSeries(tuple((cal.day(int(t)), float(f[t])) for t in q_days), "quarterly", "gdp_growth"),
        RawSeries(tuple((cal.day(int(t)), float(f[t] + e)) for t, e in zip(m_days, cpi_noise)),
                  "monthly", "cpi"),
    ]

    # events
    placed = list(spec.planted_events)
    lo = min(spec.lookback, n - 1)
    for et in spec.event_types:
        if et.count:
            days = event_rng.choice(np.arange(lo, n), size=min(et.count, n - lo), replace=False)
            placed += [(et.name, int(d)) for d in days]
    placed.sort(key=lambda p: (p[1], p[0]))
    by_name = {t.name: t for t in spec.event_types}
    prototypes = {t.name: event_rng.normal(size=spec.event_feature_dim) for t in spec.event_types}
    nodes, records = [], []
    for k, (name, day) in enumerate(placed):
        et = by_name[name]
        noise = event_rng.normal(scale=spec.event_feature_noise, size=spec.event_feature_dim)
        feats = tuple(float(v) for v in prototypes[name] + noise)
        node_id = f"ev{k:03d}"
        nodes.append(EventNode(node_id, name, day, feats))
        records.append({"id": node_id, "type": name, "ordinal": day, "date": cal.day(day).isoformat(),
                        "beta": et.beta, "decay_rate": et.decay_rate, "scale": spec.event_scale,
                        "symbols": list(symbols)})
    edges = []
    last_of_type: dict[str, str] = {}
    for node in nodes:
        if node.type in last_of_type:
            edges.append((last_of_type[node.type], node.id, "follows"))
        last_of_type[node.type] = node.id
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            if event_rng.random() < spec.related_edge_prob:
                edges.append((nodes[i].id, nodes[j].id, "related"))
    graph = EventGraph(tuple(nodes), tuple(edges))
    ev_comp = event_component(records, n)

    prices = np.zeros((s_count, n, 5))
    comps = {k: np.zeros((s_count, n)) for k in ("macro", "text", "noise")}
    docs = []
    base_prices = []
    for si, (sym, rng) in enumerate(zip(symbols, sym_rngs)):
        eps = rng.normal(scale=spec.noise, size=n) if spec.noise > 0 else np.zeros(n)
        publish = rng.random(n) < spec.doc_prob
        neutral = rng.random(n) < spec.neutral_doc_prob
        signs = np.where(rng.random(n) < 0.5, -1, 1)
        z = np.where(publish & ~neutral, signs, 0)
        for t in np.flatnonzero(publish):
            docs.append(Document(int(t), sym, _document(rng, int(z[t]), spec.text_strength)))
        text = np.zeros(n)
        text[IMPACT_LAG:] = spec.text_scale * spec.text_strength * z[:-IMPACT_LAG]
        comps["macro"][si] = spec.macro_loading * f
        comps["text"][si] = text
        comps["noise"][si] = eps
        base_prices.append(spec.base_price)
    close = close_from_components(base_prices, comps, records)
    returns = comps["macro"] + comps["text"] + comps["noise"] + ev_comp[None, :]
    for si in range(s_count):
        prices[si] = _ohlcv(close[si], returns[si], comps["noise"][si], base_prices[si])
    docs.sort(key=lambda d: (d.ordinal, d.symbol))

    ledger = json.loads(json.dumps({
        "spec": spec.to_dict(),
        "symbols": list(symbols),
        "base_prices": [float(b) for b in base_prices],
        "events": records,
        "components": {k: v.tolist() for k, v in comps.items()},
    }))
    return Dataset(cal, symbols, prices, macro, docs, graph, ledger)
