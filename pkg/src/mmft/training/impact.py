"""Counterfactual event impact: predictions with and without one event node."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mmft.errors import UndefinedMetricError
from mmft.model import MMFTModel

PEAK_FRACTION = 0.1


@dataclass
class ImpactResult:
    node_id: str
    event_type: str
    coefficient: float
    duration: int
    delta: np.ndarray  # per-day mean prediction change, [horizon]

    def to_dict(self) -> dict:
        return {"node": self.node_id, "type": self.event_type, "coefficient": self.coefficient,
                "duration_days": self.duration}


def impact_duration(delta, fraction: float = PEAK_FRACTION) -> int:
    """Number of leading days until ``|delta|`` stays below ``fraction`` of its peak."""
    a = np.abs(np.asarray(delta, dtype=np.float64))
    peak = a.max(initial=0.0)
    if peak == 0:
        return 0
    above = np.flatnonzero(a >= fraction * peak)
    return int(above[-1] + 1)


def impact_coefficient(model: MMFTModel, node_id: str, horizon: int = 63,
                       start: int | None = None) -> ImpactResult:
    """Mean prediction change from removing ``node_id`` over ``horizon`` days,
    scaled by the standard deviation of the unperturbed prediction.

    The window starts on the event's own day unless ``start`` is given.
    Predictions are the cross-symbol mean of raw-return forecasts.
    """
    st = model.store
    node = st.graph.nodes[st.graph.position(node_id)]
    first = node.ordinal if start is None else int(start)
    days = np.arange(first, min(first + horizon, st.n_days))
    base = model.predict_days(days)["y_raw"].mean(axis=0)
    cf = model.predict_days(days, exclude=(node_id,))["y_raw"].mean(axis=0)
    delta = base - cf
    sd = base.std()
    if not sd > 0:
        raise UndefinedMetricError("baseline prediction has zero spread over the horizon")
    return ImpactResult(node_id, node.type, float(delta.mean() / sd), impact_duration(delta), delta)


def impact_table(model: MMFTModel, horizon: int = 63) -> dict:
    """Per-event results and the per-type mean coefficient and duration."""
    rows = [impact_coefficient(model, n.id, horizon) for n in model.store.graph.nodes]
    by_type: dict[str, list] = {}
    for r in rows:
        by_type.setdefault(r.event_type, []).append(r)
    summary = {t: {"coefficient": float(np.mean([r.coefficient for r in rs])),
                   "duration_days": float(np.mean([r.duration for r in rs])),
                   "n_events": len(rs)} for t, rs in sorted(by_type.items())}
    return {"events": [r.to_dict() for r in rows], "types": summary}
