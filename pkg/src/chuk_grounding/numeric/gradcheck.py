"""
Central finite-difference verification of analytic gradients.
"""

from collections.abc import Callable, Sequence

import numpy as np
from pydantic import BaseModel, Field

from chuk_grounding.numeric.tape import Node, Param, Tape

LossFn = Callable[[Tape], Node]

# Relative rounding error assumed for one loss evaluation.
ROUNDING = 1e3 * float(np.finfo(np.float64).eps)


class GradCheckReport(BaseModel):
    """Outcome of comparing analytic and numeric gradients for one function."""

    name: str
    max_rel_error: float
    tol: float
    passed: bool
    checked_entries: int
    per_param: dict[str, float] = Field(default_factory=dict)


def _analytic(f: LossFn, params: Sequence[Param]) -> list[np.ndarray]:
    for param in params:
        param.zero_grad()
    tape = Tape()
    loss = f(tape)
    tape.backward(loss)
    grads = [np.array(param.grad, copy=True) for param in params]
    for param in params:
        param.zero_grad()
    return grads


def _evaluate(f: LossFn) -> float:
    return f(Tape()).item()


def grad_check(
    f: LossFn,
    params: Sequence[Param],
    eps: float = 1e-5,
    tol: float = 1e-4,
    name: str = "f",
    max_entries: int | None = None,
    rng: np.random.Generator | None = None,
    rounding: float = ROUNDING,
) -> GradCheckReport:
    """
    Compare ``d f / d params`` from the tape against central differences.

    Each numeric entry carries a rounding floor of
    ``rounding * max(|f(x + eps)|, |f(x - eps)|) / eps``, the resolution of
    the difference quotient at the loss's magnitude. The error per parameter
    is ``||max(|a - n| - floor, 0)|| / (||a|| + ||n||)`` over the checked
    entries (0 when both gradients vanish); the report passes iff the largest
    one is below ``tol``. With ``max_entries`` only that many randomly chosen
    entries per parameter are perturbed.
    """
    analytic = _analytic(f, params)
    chooser = rng if rng is not None else np.random.default_rng(0)
    per_param: dict[str, float] = {}
    checked = 0

    for param, grad in zip(params, analytic):
        size = param.value.size
        indices = np.arange(size)
        if max_entries is not None and size > max_entries:
            indices = np.sort(chooser.choice(size, size=max_entries, replace=False))

        numeric = np.empty(indices.size)
        floor = np.empty(indices.size)
        for j, idx in enumerate(indices):
            pos = np.unravel_index(idx, param.value.shape)
            original = param.value[pos]
            param.value[pos] = original + eps
            upper = _evaluate(f)
            param.value[pos] = original - eps
            lower = _evaluate(f)
            param.value[pos] = original
            numeric[j] = (upper - lower) / (2.0 * eps)
            floor[j] = rounding * max(abs(upper), abs(lower)) / eps

        exact = grad.reshape(-1)[indices]
        excess = float(np.linalg.norm(np.maximum(np.abs(exact - numeric) - floor, 0.0)))
        scale = float(np.linalg.norm(exact) + np.linalg.norm(numeric))
        per_param[param.name] = excess / scale if excess > 0.0 else 0.0
        checked += indices.size

    worst = max(per_param.values(), default=0.0)
    return GradCheckReport(
        name=name,
        max_rel_error=worst,
        tol=tol,
        passed=worst < tol,
        checked_entries=checked,
        per_param=per_param,
    )
