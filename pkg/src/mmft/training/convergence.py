"""Linear-rate check of gradient descent on a strongly convex quadratic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mmft.errors import ParameterError
from mmft.training.optim import gd_step

SLACK = 1e-9


@dataclass
class ConvergenceReport:
    mu: float
    lipschitz: float
    eta: float
    distances: np.ndarray
    bound: np.ndarray
    passed: bool

    @property
    def optimal_rate(self) -> float:
        """``(L - mu) / (L + mu)``, the contraction at ``eta = 2 / (mu + L)``."""
        return (self.lipschitz - self.mu) / (self.lipschitz + self.mu)

    @property
    def rate(self) -> float:
        return step_rate(self.mu, self.lipschitz, self.eta)

    def observed_factors(self) -> np.ndarray:
        """Per-step ratios ``d_{k+1} / d_k`` (up to the first exact zero)."""
        d = self.distances
        nz = d[:-1] > 0
        return d[1:][nz] / d[:-1][nz]

    def to_dict(self) -> dict:
        factors = self.observed_factors()
        return {
            "mu": self.mu, "L": self.lipschitz, "eta": self.eta, "rate": self.rate,
            "optimal_rate": self.optimal_rate,
            "passed": self.passed, "steps": int(self.distances.size - 1),
            "max_observed_factor": float(factors.max()) if factors.size else 0.0,
            "final_distance": float(self.distances[-1]),
            "max_excess": float(np.max(self.distances - self.bound)),
        }


def step_rate(mu: float, L: float, eta: float) -> float:
    """Distance contraction ``sqrt(1 - 2 eta mu L / (mu + L))`` guaranteed for ``eta <= 2/(mu+L)``.

    At ``eta = 2 / (mu + L)`` this is exactly ``(L - mu) / (L + mu)``.
    """
    return float(np.sqrt(max(0.0, 1.0 - 2.0 * eta * mu * L / (mu + L))))


def convergence_harness(mu: float, L: float, eta: float, steps: int = 200,
                        theta0=(1.0, 1.0)) -> ConvergenceReport:
    """Plain GD on ``0.5 * (mu x^2 + L y^2)``; compare ``|theta_k|`` with ``rate^k |theta_0|``.

    Accepts step sizes ``0 < eta <= 2 / (mu + L)``; ``rate`` is :func:`step_rate`.
    """
    if not 0 < mu <= L:
        raise ParameterError(f"need 0 < mu <= L, got mu={mu}, L={L}")
    limit = 2.0 / (mu + L)
    if not 0 < eta <= limit * (1 + 1e-12):
        raise ParameterError(f"step size {eta} outside (0, 2/(mu+L)] = (0, {limit}]")
    if steps < 0:
        raise ParameterError("steps must be >= 0")
    curv = np.array([mu, L], dtype=np.float64)
    theta = np.asarray(theta0, dtype=np.float64).copy()
    if theta.shape != (2,):
        raise ParameterError("theta0 must have two coordinates")
    dist = [float(np.linalg.norm(theta))]
    for _ in range(steps):
        theta = gd_step({"theta": theta}, {"theta": curv * theta}, eta)["theta"]
        dist.append(float(np.linalg.norm(theta)))
    dist = np.array(dist)
    rate = step_rate(mu, L, eta)
    bound = rate ** np.arange(steps + 1) * dist[0]
    passed = bool(np.all(dist <= bound + SLACK))
    return ConvergenceReport(mu, L, eta, dist, bound, passed)
