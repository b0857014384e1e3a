"""Trading calendar, mixed-frequency alignment and raw position-encoding signals."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from mmft.errors import InputError, ParameterError, RangeError

FREQUENCIES = ("daily", "monthly", "quarterly")
CALENDAR_PERIODS = (5, 21, 252)


def parse_date(value) -> dt.date:
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    try:
        return dt.date.fromisoformat(str(value).strip())
    except ValueError as exc:
        raise InputError(f"not an ISO-8601 date: {value!r}") from exc


@dataclass(frozen=True)
class TradingCalendar:
    """Ordered business days; ``index`` is the inverse of ``days``."""

    days: tuple
    index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        days = tuple(parse_date(d) for d in self.days)
        if any(b <= a for a, b in zip(days, days[1:])):
            raise InputError("calendar days must be strictly increasing")
        object.__setattr__(self, "days", days)
        object.__setattr__(self, "index", {d: i for i, d in enumerate(days)})
        object.__setattr__(self, "_np", np.array(days, dtype="datetime64[D]"))

    def __len__(self) -> int:
        return len(self.days)

    def ordinal(self, d) -> int:
        d = parse_date(d)
        try:
            return self.index[d]
        except KeyError:
            raise RangeError(f"{d.isoformat()} is not a trading day of this calendar") from None

    def day(self, i: int) -> dt.date:
        if not 0 <= i < len(self.days):
            raise RangeError(f"ordinal {i} outside calendar of {len(self.days)} days")
        return self.days[i]

    def check_ordinal(self, t) -> None:
        t = np.asarray(t)
        if t.size and (t.min() < 0 or t.max() >= len(self.days)):
            raise RangeError(f"ordinal outside calendar of {len(self.days)} days")

    def position(self, d) -> int:
        """Grid position of ``d``: its ordinal, or the next trading day's.

        Dates outside the span extrapolate by weekday count, so positions can
        be negative or exceed ``len(self) - 1``.
        """
        d = np.datetime64(parse_date(d), "D")
        if not len(self.days):
            raise RangeError("empty calendar")
        d = np.busday_offset(d, 0, roll="forward")
        cal = self._np
        if d < cal[0]:
            return -int(np.busday_count(d, cal[0]))
        if d > cal[-1]:
            return len(cal) - 1 + int(np.busday_count(cal[-1], d))
        return int(np.searchsorted(cal, d, side="left"))

    def iso(self) -> list[str]:
        return [d.isoformat() for d in self.days]


def build_calendar(start, end) -> TradingCalendar:
    """All Monday-Friday dates in ``[start, end]``; no exchange holidays."""
    start, end = parse_date(start), parse_date(end)
    if start > end:
        raise RangeError(f"calendar start {start} after end {end}")
    n = (end - start).days + 1
    days = [start + dt.timedelta(days=i) for i in range(n)]
    return TradingCalendar(tuple(d for d in days if d.weekday() < 5))


def calendar_from_start(start, n_days: int) -> TradingCalendar:
    """The first ``n_days`` business days on or after ``start``."""
    first = np.busday_offset(np.datetime64(parse_date(start), "D"), 0, roll="forward")
    days = np.busday_offset(first, np.arange(n_days))
    return TradingCalendar(tuple(d.astype(dt.date) for d in days))


@dataclass(frozen=True)
class RawSeries:
    observations: tuple
    frequency: str = "daily"
    name: str = ""

    def __post_init__(self):
        obs = tuple((parse_date(d), float(v)) for d, v in self.observations)
        if self.frequency not in FREQUENCIES:
            raise InputError(f"unknown frequency {self.frequency!r}")
        if any(b[0] <= a[0] for a, b in zip(obs, obs[1:])):
            raise InputError(f"series {self.name!r}: dates must be strictly increasing")
        if not all(np.isfinite(v) for _, v in obs):
            raise InputError(f"series {self.name!r}: non-finite value")
        object.__setattr__(self, "observations", obs)

    def positions(self, cal: TradingCalendar) -> np.ndarray:
        return np.array([cal.position(d) for d, _ in self.observations], dtype=np.int64)

    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.observations], dtype=np.float64)


def _dedupe_positions(pos: np.ndarray, vals: np.ndarray):
    # Observations that snap onto the same trading day keep the latest value.
    keep = np.append(pos[1:] != pos[:-1], True)
    return pos[keep], vals[keep]


def align_series(s: RawSeries, cal: TradingCalendar) -> np.ndarray:
    """One value per calendar day: linear between observations, held outside them."""
    if not s.observations:
        raise InputError(f"series {s.name!r} has no observations")
    pos, vals = _dedupe_positions(s.positions(cal), s.values())
    grid = np.arange(len(cal), dtype=np.float64)
    return np.interp(grid, pos.astype(np.float64), vals)


def align_series_asof(s: RawSeries, cal: TradingCalendar, lookback: int, max_staleness: float = 252.0):
    """Point-in-time lookback panels for every day.

    Returns ``(values, staleness)`` of shape ``[len(cal), lookback]``. Row ``t``
    covers days ``t-lookback+1 .. t`` as they could be known on day ``t``:
    interpolated up to the last observation on or before ``t`` and held after
    it. ``staleness`` counts days since the last true observation at each
    covered day; days with nothing observed yet hold 0 with ``max_staleness``.
    """
    if not s.observations:
        raise InputError(f"series {s.name!r} has no observations")
    n = len(cal)
    full = align_series(s, cal)
    pos, vals = _dedupe_positions(s.positions(cal), s.values())
    grid = np.arange(n)
    # index of last observation with position <= day, -1 if none
    last_idx = np.searchsorted(pos, grid, side="right") - 1
    last_pos = np.where(last_idx >= 0, pos[np.maximum(last_idx, 0)], -1)
    last_val = np.where(last_idx >= 0, vals[np.maximum(last_idx, 0)], 0.0)

    offs = np.arange(lookback) - (lookback - 1)
    days = grid[:, None] + offs[None, :]
    valid = days >= 0
    dclip = np.clip(days, 0, n - 1)
    known_upto = last_pos[:, None]
    values = np.where(dclip <= known_upto, full[dclip], last_val[:, None])
    values = np.where(last_idx[:, None] >= 0, values, 0.0)
    stale = np.where(last_idx[dclip] >= 0, dclip - last_pos[dclip], max_staleness).astype(np.float64)
    stale = np.minimum(stale, max_staleness)
    values = np.where(valid, values, 0.0)
    stale = np.where(valid, stale, max_staleness)
    return values, stale


@dataclass(frozen=True)
class TimelineEvent:
    ordinal: int
    node_id: str
    event_type: str


@dataclass(frozen=True)
class EventTimeline:
    events: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(sorted(self.events, key=lambda e: (e.ordinal, e.node_id))))

    @classmethod
    def from_dates(cls, entries: Iterable[Sequence], cal: TradingCalendar) -> "EventTimeline":
        """Build from ``(date, node_id, event_type)`` triples on ``cal``."""
        evs = [TimelineEvent(cal.ordinal(d), str(nid), str(et)) for d, nid, et in entries]
        return cls(tuple(evs))

    def ordinals(self) -> np.ndarray:
        return np.array([e.ordinal for e in self.events], dtype=np.int64)

    def without(self, node_id: str) -> "EventTimeline":
        return EventTimeline(tuple(e for e in self.events if e.node_id != node_id))


def enc_calendar(t, cal: TradingCalendar) -> np.ndarray:
    """``[sin, cos]`` pairs of the day ordinal at weekly, monthly and yearly periods."""
    cal.check_ordinal(t)
    t = np.asarray(t, dtype=np.float64)
    parts = []
    for period in CALENDAR_PERIODS:
        ang = 2.0 * np.pi * t / period
        parts += [np.sin(ang), np.cos(ang)]
    return np.stack(parts, axis=-1)


def enc_event(t, tl: EventTimeline, sigma: float, causal: bool = False):
    """Gaussian proximity to the nearest event: ``max_e exp(-(t-t_e)^2 / 2 sigma^2)``.

    With ``causal=True`` only events on or before ``t`` count.
    """
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    t = np.asarray(t, dtype=np.float64)
    te = tl.ordinals().astype(np.float64)
    if te.size == 0:
        return np.zeros(t.shape) if t.ndim else 0.0
    diff = t[..., None] - te
    k = np.exp(-diff * diff / (2.0 * sigma * sigma))
    if causal:
        k = np.where(diff >= 0, k, 0.0)
    out = k.max(axis=-1)
    return out if t.ndim else float(out)


def enc_decay(t, tl: EventTimeline, lam: float):
    """Causal exponential decay since the most recent event: ``max_{t_e<=t} exp(-lam (t-t_e))``."""
    if not lam > 0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    t = np.asarray(t, dtype=np.float64)
    te = tl.ordinals().astype(np.float64)
    if te.size == 0:
        return np.zeros(t.shape) if t.ndim else 0.0
    diff = t[..., None] - te
    k = np.where(diff >= 0, np.exp(-lam * np.maximum(diff, 0.0)), 0.0)
    out = k.max(axis=-1)
    return out if t.ndim else float(out)
