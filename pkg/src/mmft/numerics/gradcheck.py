"""Central finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from mmft.numerics.tensor import Tensor, no_grad

# Below this magnitude, errors are measured absolutely rather than relatively.
_REL_FLOOR = 1e-3


@dataclass
class GradCheckReport:
    passed: bool
    max_rel_error: float
    n_checked: int
    tol: float
    failures: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.passed


def grad_check(
    f: Callable[..., Tensor],
    x: Tensor | Sequence[Tensor],
    step: float = 1e-5,
    tol: float = 1e-4,
    max_elements: int | None = None,
    rng: np.random.Generator | None = None,
) -> GradCheckReport:
    """Compare reverse-mode gradients of scalar ``f`` against central differences.

    ``x`` is a tensor (``f(x)``) or a sequence of tensors (``f(*x)``). Every
    tensor is marked ``requires_grad``. When ``max_elements`` is set, at most
    that many entries per tensor are probed, chosen by ``rng``.

    The error per entry is ``|analytic - numeric| / max(|analytic|, |numeric|, 1e-3)``.
    """
    xs = [x] if isinstance(x, Tensor) else list(x)
    for t in xs:
        t.requires_grad = True
        t.grad = None
    call = (lambda: f(xs[0])) if isinstance(x, Tensor) else (lambda: f(*xs))

    loss = call()
    loss.backward()
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in xs]

    rng = rng or np.random.default_rng(0)
    worst = 0.0
    checked = 0
    failures = []
    with no_grad():
        for ti, t in enumerate(xs):
            flat = t.data.reshape(-1)
            idxs = np.arange(flat.size)
            if max_elements is not None and flat.size > max_elements:
                idxs = np.sort(rng.choice(flat.size, size=max_elements, replace=False))
            for i in idxs:
                orig = flat[i]
                flat[i] = orig + step
                fp = call().item()
                flat[i] = orig - step
                fm = call().item()
                flat[i] = orig
                num = (fp - fm) / (2.0 * step)
                ana = analytic[ti].reshape(-1)[i]
                err = abs(ana - num) / max(abs(ana), abs(num), _REL_FLOOR)
                checked += 1
                worst = max(worst, float(err))
                if not err < tol:
                    failures.append((ti, int(i), float(ana), float(num)))
    for t in xs:
        t.grad = None
    return GradCheckReport(not failures, worst, checked, tol, failures)
