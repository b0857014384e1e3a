"""Channel ablations: retrain with one modality replaced by its null embedding."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from mmft.config import CHANNELS
from mmft.model import check_channels
from mmft.training.loop import as_store, evaluate, train
from mmft.training.metrics import MetricsReport


def ablate(cfg, data, drop: str, seed: int | None = None, split: str = "test") -> MetricsReport:
    """Train with channel ``drop`` nulled (same budget and seed) and report ``split`` metrics."""
    check_channels((drop,))
    return evaluate(train(cfg, as_store(data, cfg), drop=(drop,), seed=seed).model, split)


def ablation_table(cfg, data, tags=CHANNELS, seed: int | None = None, workers: int = 1) -> list[dict]:
    """One row for the full model and one per dropped channel."""
    check_channels(tags)
    store = as_store(data, cfg)
    arms = [()] + [(t,) for t in tags]

    def run(drop):
        return evaluate(train(cfg, store, drop=drop, seed=seed).model, "test")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(run, arms))
    else:
        reports = [run(a) for a in arms]
    full = reports[0].rmse
    rows = []
    for drop, rep in zip(arms, reports):
        row = {"variant": "full" if not drop else f"w/o {drop[0]}", "dropped": drop[0] if drop else None}
        row.update(rep.to_dict())
        row["rmse_change"] = rep.rmse / full - 1.0
        rows.append(row)
    return rows
