"""Mini-batch training with date-ordered splits, and held-out evaluation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from mmft.errors import NumericError, UndefinedMetricError
from mmft.model import MMFTModel
from mmft.params import ModelParams
from mmft.pipeline import FeatureStore
from mmft.training.losses import LossWeights, total_loss
from mmft.training.metrics import MetricsReport, accuracy, confusion, rmse, sharpe
from mmft.training.optim import AdamState, adam_step, clip_by_global_norm, gd_step

log = logging.getLogger("mmft.train")


@dataclass
class TrainResult:
    model: MMFTModel
    history: list = field(default_factory=list)
    best_epoch: int = -1

    @property
    def params(self) -> ModelParams:
        return self.model.params

    def losses(self) -> list[float]:
        return [h["train_loss"] for h in self.history]


def as_store(data, cfg) -> FeatureStore:
    return data if isinstance(data, FeatureStore) else FeatureStore(data, cfg)


def evaluate(model: MMFTModel, split: str = "test", exclude=()) -> MetricsReport:
    """Raw-return RMSE, label accuracy and the Sharpe ratio of sign positions."""
    st = model.store
    days = st.splits[split]
    out = model.predict_days(days, exclude=exclude)
    actual = st.ret[:, days]
    pred_cls = out["probs"].argmax(axis=-1)
    true_cls = st.labels[:, days]
    # equal-weight portfolio long/short on the predicted sign
    pnl = (np.sign(out["y_raw"]) * actual).mean(axis=0)
    try:
        sr = sharpe(pnl)[1]
    except UndefinedMetricError:
        sr = None
    return MetricsReport(
        rmse=rmse(out["y_raw"], actual),
        accuracy=accuracy(pred_cls, true_cls),
        sharpe=sr,
        confusion=confusion(pred_cls, true_cls),
        persistence_rmse=rmse(np.zeros_like(actual), actual),
        n=int(actual.size),
    )


def _batches(store: FeatureStore, rng: np.random.Generator, length: int, size: int):
    windows = store.train_windows(rng, length)
    order = rng.permutation(len(windows))
    for k in range(0, len(order), size):
        pick = [windows[i] for i in order[k:k + size]]
        yield [p[0] for p in pick], [p[1] for p in pick]


def train(cfg, data, drop=None, seed: int | None = None) -> TrainResult:
    """Fit a model on the training split, keeping the epoch with the best validation RMSE."""
    store = as_store(data, cfg)
    seed = cfg.seed if seed is None else seed
    model = MMFTModel.init(cfg, store, seed=seed, drop=drop)
    params = model.params
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(6)[5])
    lw = LossWeights.from_config(cfg)
    state = AdamState(lr=cfg.learning_rate)
    length = min(cfg.seq_len, store.n_days)
    history: list[dict] = []
    best, best_rmse, best_epoch = params.copy(), np.inf, -1

    for epoch in range(cfg.epochs):
        total, count = 0.0, 0
        for syms, starts in _batches(store, rng, length, cfg.batch_size):
            batch = store.batch(syms, starts, length, split="train")
            if not batch.loss_mask.any():
                continue
            params.zero_grad()
            out = model.forward(batch)
            loss = total_loss(out, batch.y, batch.labels, lw, batch.loss_mask)
            try:
                loss.backward()
            except NumericError as exc:
                raise NumericError(f"epoch {epoch}: {exc}") from exc
            grads, _ = clip_by_global_norm(params.grads(), cfg.grad_clip)
            arrays = params.arrays()
            if cfg.optimizer == "gd":
                new = gd_step(arrays, grads, cfg.learning_rate)
            else:
                new, state = adam_step(arrays, grads, state)
            params.assign(new)
            total += float(loss.data)
            count += 1
        val = evaluate(model, "val")
        row = {"epoch": epoch, "train_loss": total / max(count, 1), "val_rmse": val.rmse,
               "val_accuracy": val.accuracy, "val_improvement": val.improvement}
        history.append(row)
        log.info("epoch %d loss %.6f val_rmse %.6g val_acc %.4f", epoch, row["train_loss"],
                 val.rmse, val.accuracy)
        if val.rmse < best_rmse:
            best, best_rmse, best_epoch = params.copy(), val.rmse, epoch
        elif cfg.patience and epoch - best_epoch >= cfg.patience:
            break

    model.params = best
    if cfg.checkpoint:
        best.save(cfg.checkpoint)
    return TrainResult(model, history, best_epoch)
