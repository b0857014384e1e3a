"""Losses, optimisers, metrics, the training loop and the analysis protocols."""

from mmft.training.ablation import ablate, ablation_table
from mmft.training.convergence import ConvergenceReport, convergence_harness, step_rate
from mmft.training.impact import ImpactResult, impact_coefficient, impact_duration, impact_table
from mmft.training.loop import TrainResult, as_store, evaluate, train
from mmft.training.losses import LossWeights, focal_loss, l2_loss, total_loss
from mmft.training.metrics import MetricsReport, accuracy, confusion, rmse, sharpe
from mmft.training.optim import AdamState, adam_step, clip_by_global_norm, gd_step

__all__ = [
    "AdamState", "ConvergenceReport", "ImpactResult", "LossWeights", "MetricsReport",
    "TrainResult", "ablate", "ablation_table", "accuracy", "adam_step", "as_store",
    "clip_by_global_norm", "confusion", "convergence_harness", "evaluate", "focal_loss",
    "gd_step", "impact_coefficient", "impact_duration", "impact_table", "l2_loss", "rmse",
    "sharpe", "step_rate", "total_loss", "train",
]
