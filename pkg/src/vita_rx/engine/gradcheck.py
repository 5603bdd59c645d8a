"""
Finite-difference gradient checking.

Compares tape gradients with central differences entry by entry and reports
the worst relative error |a − n| / max(floor, |a| + |n|).
"""

from __future__ import annotations

from collections.abc import Callable, Mapping

import numpy as np

from vita_rx.domain.exceptions import NumericalError
from vita_rx.engine.tensor import Tape, Tensor


def _evaluate(f: Callable[[], Tensor]) -> float:
    value = f().item()
    if not np.isfinite(value):
        raise NumericalError(f"grad_check: f evaluated to {value}")
    return value


def grad_check(
    f: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    h: float = 1e-6,
    floor: float = 1e-8,
    max_entries: int | None = None,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and numeric gradients.

    Args:
        f: Builds a scalar from the current values of ``params``. It must be
            pure: two calls at the same point return the same value.
        params: Named leaves to perturb (in place, restored afterwards).
        h: Central-difference step.
        floor: Lower bound of the error denominator.
        max_entries: Check at most this many randomly chosen entries per
            parameter (all entries when None).
        seed: Seed for the entry subsample.

    Raises:
        NumericalError: If f is non-finite at any evaluated point.
    """
    with Tape() as tape:
        loss = f()
    if not np.isfinite(loss.item()):
        raise NumericalError(f"grad_check: f evaluated to {loss.item()}")
    analytic = tape.gradient(loss, params)

    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, p in params.items():
        flat = p.values.reshape(-1)
        g = analytic[name].reshape(-1)
        entries = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            entries = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
        for i in entries:
            original = flat[i]
            flat[i] = original + h
            f_plus = _evaluate(f)
            flat[i] = original - h
            f_minus = _evaluate(f)
            flat[i] = original
            numeric = (f_plus - f_minus) / (2.0 * h)
            err = abs(g[i] - numeric) / max(floor, abs(g[i]) + abs(numeric))
            worst = max(worst, float(err))
    return worst
