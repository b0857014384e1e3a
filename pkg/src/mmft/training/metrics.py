"""Evaluation metrics and the per-split metrics report."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from mmft.errors import DimensionError, InputError, UndefinedMetricError

TRADING_DAYS = 252


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise InputError("metric over empty input")
    return a, b


def rmse(pred, actual) -> float:
    p, a = _pair(pred, actual)
    return float(np.sqrt(np.mean((p - a) ** 2)))


def accuracy(pred_classes, true_classes) -> float:
    p = np.asarray(pred_classes).reshape(-1)
    t = np.asarray(true_classes).reshape(-1)
    if p.shape != t.shape:
        raise DimensionError(f"length mismatch: {p.size} vs {t.size}")
    if p.size == 0:
        raise InputError("accuracy over empty input")
    return float(np.mean(p == t))


def sharpe(daily_returns, risk_free_daily: float = 0.0) -> tuple[float, float]:
    """``(daily, annualised)``: mean excess return over its sample std (n-1)."""
    r = np.asarray(daily_returns, dtype=np.float64).reshape(-1) - risk_free_daily
    if r.size < 2:
        raise UndefinedMetricError("sharpe needs at least two observations")
    sd = r.std(ddof=1)
    if not sd > 1e-15 * max(1.0, float(np.abs(r).max())):
        raise UndefinedMetricError("sharpe undefined for zero-variance returns")
    daily = float(r.mean() / sd)
    return daily, daily * float(np.sqrt(TRADING_DAYS))


def confusion(pred_classes, true_classes, n_classes: int = 3) -> list[list[int]]:
    """``m[true][pred]`` counts."""
    m = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(m, (np.asarray(true_classes).reshape(-1), np.asarray(pred_classes).reshape(-1)), 1)
    return m.tolist()


@dataclass
class MetricsReport:
    rmse: float
    accuracy: float
    sharpe: float | None
    confusion: list = field(default_factory=list)
    persistence_rmse: float | None = None
    n: int = 0

    def __post_init__(self):
        if self.rmse < 0 or not 0.0 <= self.accuracy <= 1.0:
            raise InputError("rmse must be >= 0 and accuracy within [0, 1]")

    @property
    def improvement(self) -> float | None:
        """Fractional RMSE reduction against the zero-return forecast."""
        if not self.persistence_rmse:
            return None
        return 1.0 - self.rmse / self.persistence_rmse

    def to_dict(self) -> dict:
        d = asdict(self)
        d["improvement"] = self.improvement
        return d
