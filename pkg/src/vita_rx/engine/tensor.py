"""
Tensor and Tape — dense float64 arrays on a reverse-mode differentiation tape.

A ``Tensor`` wraps a contiguous float64 ndarray. Operations in
``vita_rx.engine.ops`` record themselves on the innermost active ``Tape``
when at least one input requires a gradient; outside a tape (or with only
constant inputs) they return constants, which is the inference path.

Usage:
    w = Tensor(np.ones((2, 2)), requires_grad=True, name="w")
    with Tape() as tape:
        loss = ops.sum(ops.matmul(x, w))
    grads = tape.backward(loss)
"""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from types import TracebackType
from typing import Any

import numpy as np

from vita_rx.domain.exceptions import ShapeError

VJP = Callable[[np.ndarray], Sequence["np.ndarray | None"]]


class Tensor:
    """Dense row-major float64 array with an optional gradient slot."""

    __slots__ = ("_tape", "grad", "name", "node_id", "requires_grad", "values")

    def __init__(self, values: Any, requires_grad: bool = False, name: str = "") -> None:
        self.values: np.ndarray = np.ascontiguousarray(np.array(values, dtype=np.float64))
        self.requires_grad = requires_grad
        self.name = name
        self.grad: np.ndarray | None = None
        self.node_id: int | None = None
        self._tape: Tape | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.values.shape)

    @property
    def ndim(self) -> int:
        return int(self.values.ndim)

    @property
    def size(self) -> int:
        return int(self.values.size)

    def item(self) -> float:
        if self.values.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.values.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.values

    def detach(self) -> Tensor:
        """Constant sharing this tensor's values; never recorded."""
        out = Tensor.__new__(Tensor)
        out.values = self.values
        out.requires_grad = False
        out.name = self.name
        out.grad = None
        out.node_id = None
        out._tape = None
        return out

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"


@dataclass
class _Record:
    output: int
    inputs: tuple[Tensor, ...]
    vjp: VJP


_ACTIVE: list[Tape] = []


def active_tape() -> Tape | None:
    """Innermost tape of the current context, if any."""
    return _ACTIVE[-1] if _ACTIVE else None


class Tape:
    """Ordered record of primitive operations.

    Records are appended in execution order, so every record's inputs were
    produced (or registered as leaves) before it. One tape serves one
    forward/backward pass and must not be shared between threads.
    """

    def __init__(self) -> None:
        self._records: list[_Record] = []
        self._leaves: dict[int, Tensor] = {}
        self._next_id = 0

    def __enter__(self) -> Tape:
        _ACTIVE.append(self)
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        _ACTIVE.remove(self)

    def __len__(self) -> int:
        return len(self._records)

    def _new_id(self) -> int:
        self._next_id += 1
        return self._next_id

    def _register(self, t: Tensor) -> None:
        if not t.requires_grad or t._tape is self:
            return
        t._tape = self
        t.node_id = self._new_id()
        self._leaves[t.node_id] = t

    def record(self, values: np.ndarray, inputs: Sequence[Tensor], vjp: VJP) -> Tensor:
        """Append one primitive and return its (grad-requiring) output."""
        for t in inputs:
            self._register(t)
        out = Tensor.__new__(Tensor)
        out.values = np.ascontiguousarray(values, dtype=np.float64)
        out.requires_grad = True
        out.name = ""
        out.grad = None
        out._tape = self
        out.node_id = self._new_id()
        self._records.append(_Record(output=out.node_id, inputs=tuple(inputs), vjp=vjp))
        return out

    def backward(self, loss: Tensor) -> dict[int, np.ndarray]:
        """Propagate dLoss/dx back through the tape.

        Every leaf registered on this tape gets ``.grad`` set (zeros when the
        loss does not depend on it).

        Returns:
            Leaf node id → gradient.

        Raises:
            ShapeError: If ``loss`` is not scalar-shaped.
        """
        if loss.shape != ():
            raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")

        grads: dict[int, np.ndarray] = {}
        if loss._tape is self and loss.node_id is not None:
            grads[loss.node_id] = np.ones((), dtype=np.float64)

        for rec in reversed(self._records):
            g = grads.pop(rec.output, None)
            if g is None:
                continue
            for inp, g_in in zip(rec.inputs, rec.vjp(g)):
                if g_in is None or not inp.requires_grad or inp._tape is not self:
                    continue
                assert inp.node_id is not None
                if inp.node_id in grads:
                    grads[inp.node_id] = grads[inp.node_id] + g_in
                else:
                    grads[inp.node_id] = np.asarray(g_in, dtype=np.float64)

        leaf_grads: dict[int, np.ndarray] = {}
        for node_id, leaf in self._leaves.items():
            g = grads.get(node_id)
            leaf.grad = np.zeros_like(leaf.values) if g is None else g.reshape(leaf.shape)
            leaf_grads[node_id] = leaf.grad
        return leaf_grads

    def gradient(self, loss: Tensor, params: Mapping[str, Tensor]) -> dict[str, np.ndarray]:
        """Named gradients of ``loss``; parameters never used on this tape get zeros."""
        by_id = self.backward(loss)
        out: dict[str, np.ndarray] = {}
        for name, p in params.items():
            if p._tape is self and p.node_id in by_id:
                out[name] = by_id[p.node_id]
            else:
                p.grad = np.zeros_like(p.values)
                out[name] = p.grad
        return out
