"""Adam with bias correction over a named parameter set."""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from vita_rx.domain.exceptions import NumericalError
from vita_rx.engine.tensor import Tensor

log = logging.getLogger(__name__)


@dataclass
class AdamState:
    """First/second moments per parameter plus the step counter."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: Mapping[str, Tensor], lr: float = 1e-3) -> AdamState:
        return cls(
            lr=lr,
            m={name: np.zeros_like(p.values) for name, p in params.items()},
            v={name: np.zeros_like(p.values) for name, p in params.items()},
        )


def adam_step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
) -> AdamState:
    """Apply one Adam update in place to ``params``.

    The whole step is rejected before any parameter changes if a gradient
    is non-finite or its shape disagrees with the parameter.

    Raises:
        NumericalError: On a non-finite gradient.
        ValueError: On a gradient/moment shape mismatch.
    """
    for name, g in grads.items():
        if name not in params:
            raise ValueError(f"Gradient for unknown parameter '{name}'")
        if g.shape != params[name].shape:
            raise ValueError(
                f"Gradient shape {g.shape} != parameter '{name}' shape {params[name].shape}"
            )
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"Non-finite gradient for parameter '{name}'")

    state.step += 1
    bc1 = 1.0 - state.beta1**state.step
    bc2 = 1.0 - state.beta2**state.step
    for name, g in grads.items():
        p = params[name]
        m = state.m.setdefault(name, np.zeros_like(p.values))
        v = state.v.setdefault(name, np.zeros_like(p.values))
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p.values -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return state
