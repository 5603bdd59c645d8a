"""
Primitive and structural tensor operations with their vector-Jacobian products.

There is no implicit broadcasting: binary elementwise ops require equal
shapes, and every coercion goes through ``reshape``, ``repeat`` or
``stack``. Each op computes its forward value eagerly and, inside an active
``Tape``, records a closure mapping the output gradient to input gradients.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from vita_rx.domain.exceptions import ShapeError
from vita_rx.engine.tensor import VJP, Tensor, active_tape

Scalar = float | Tensor


def _result(values: np.ndarray, inputs: Sequence[Tensor], vjp: VJP) -> Tensor:
    tape = active_tape()
    if tape is None or not any(t.requires_grad for t in inputs):
        return Tensor(values)
    return tape.record(values, inputs, vjp)


def _same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def constant(values: object) -> Tensor:
    """Tensor that never requires a gradient."""
    return Tensor(values)


# ── linear algebra ──────────────────────────────────────────────


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product for 1-D/2-D operands (vector·matrix, matrix·vector, dot)."""
    if a.ndim not in (1, 2) or b.ndim not in (1, 2):
        raise ShapeError(f"matmul: operands must be 1-D or 2-D, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul: shape mismatch {a.shape} vs {b.shape}")

    a2 = a.values.reshape(1, -1) if a.ndim == 1 else a.values
    b2 = b.values.reshape(-1, 1) if b.ndim == 1 else b.values
    out2 = a2 @ b2
    out = np.matmul(a.values, b.values)

    def vjp(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        g2 = np.reshape(g, out2.shape)
        return (g2 @ b2.T).reshape(a.shape), (a2.T @ g2).reshape(b.shape)

    return _result(out, (a, b), vjp)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    """Concatenate along ``axis``; every other axis must match."""
    if not tensors:
        raise ShapeError("concat: needs at least one tensor")
    ndim = tensors[0].ndim
    ax = axis % ndim if ndim else 0
    for t in tensors[1:]:
        if t.ndim != ndim or any(
            t.shape[i] != tensors[0].shape[i] for i in range(ndim) if i != ax
        ):
            raise ShapeError(f"concat: shape mismatch {tensors[0].shape} vs {t.shape}")
    out = np.concatenate([t.values for t in tensors], axis=ax)
    offsets = np.cumsum([t.shape[ax] for t in tensors])[:-1]

    def vjp(g: np.ndarray) -> list[np.ndarray]:
        return np.split(g, offsets, axis=ax)

    return _result(out, tuple(tensors), vjp)


def transpose(x: Tensor) -> Tensor:
    """Reverse the axes (matrix transpose for 2-D)."""
    return _result(x.values.T, (x,), lambda g: (g.T,))


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    """Same values, new shape of equal size."""
    if int(np.prod(shape)) != x.size:
        raise ShapeError(f"reshape: cannot view {x.shape} as {shape}")
    return _result(x.values.reshape(shape), (x,), lambda g: (g.reshape(x.shape),))


def repeat(x: Tensor, n: int) -> Tensor:
    """Stack ``n`` copies of ``x`` along a new leading axis."""
    out = np.repeat(x.values[None, ...], n, axis=0)
    return _result(out, (x,), lambda g: (g.sum(axis=0),))


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Stack equal-shaped tensors along a new axis."""
    if not tensors:
        raise ShapeError("stack: needs at least one tensor")
    for t in tensors[1:]:
        _same_shape("stack", tensors[0], t)
    out = np.stack([t.values for t in tensors], axis=axis)

    def vjp(g: np.ndarray) -> list[np.ndarray]:
        return [np.take(g, i, axis=axis) for i in range(len(tensors))]

    return _result(out, tuple(tensors), vjp)


def take_rows(x: Tensor, index: int | Sequence[int]) -> Tensor:
    """Row lookup (embedding select). An int index drops the leading axis."""
    idx: int | list[int] = index if isinstance(index, int) else list(index)
    out = x.values[idx]

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        gx = np.zeros_like(x.values)
        np.add.at(gx, idx, g)
        return (gx,)

    return _result(out, (x,), vjp)


# ── elementwise ─────────────────────────────────────────────────


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("add", a, b)
    return _result(a.values + b.values, (a, b), lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("sub", a, b)
    return _result(a.values - b.values, (a, b), lambda g: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("mul", a, b)
    av, bv = a.values, b.values
    return _result(av * bv, (a, b), lambda g: (g * bv, g * av))


def scale(x: Tensor, c: Scalar) -> Tensor:
    """Multiply by a Python float or a scalar-shaped tensor."""
    if isinstance(c, Tensor):
        if c.shape != ():
            raise ShapeError(f"scale: factor must be scalar-shaped, got {c.shape}")
        cv = float(c.values)
        xv = x.values
        return _result(xv * cv, (x, c), lambda g: (g * cv, np.sum(g * xv)))
    factor = float(c)
    return _result(x.values * factor, (x,), lambda g: (g * factor,))


def sigmoid(x: Tensor) -> Tensor:
    out = np.exp(-np.logaddexp(0.0, -x.values))
    return _result(out, (x,), lambda g: (g * out * (1.0 - out),))


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.values)
    return _result(out, (x,), lambda g: (g * (1.0 - out * out),))


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.values)
    return _result(out, (x,), lambda g: (g * out,))


def log(x: Tensor) -> Tensor:
    xv = x.values
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(xv)
    return _result(out, (x,), lambda g: (g / xv,))


def clamp(x: Tensor, lo: float | None = None, hi: float | None = None) -> Tensor:
    """Elementwise bounds; the gradient passes only where ``lo <= x <= hi``."""
    xv = x.values
    out = np.clip(xv, lo, hi)
    inside = np.ones_like(xv, dtype=bool)
    if lo is not None:
        inside &= xv >= lo
    if hi is not None:
        inside &= xv <= hi
    return _result(out, (x,), lambda g: (g * inside,))


def masked_fill(x: Tensor, mask: np.ndarray, value: float) -> Tensor:
    """Replace entries where ``mask`` is true by ``value`` (no gradient there)."""
    m = np.asarray(mask, dtype=bool)
    if m.shape != x.shape:
        raise ShapeError(f"masked_fill: shape mismatch {x.shape} vs {m.shape}")
    out = np.where(m, value, x.values)
    return _result(out, (x,), lambda g: (np.where(m, 0.0, g),))


def straight_through(hard: np.ndarray, soft: Tensor) -> Tensor:
    """Forward ``hard``, backward as the identity on ``soft``."""
    hv = np.asarray(hard, dtype=np.float64)
    if hv.shape != soft.shape:
        raise ShapeError(f"straight_through: shape mismatch {hv.shape} vs {soft.shape}")
    return _result(hv.copy(), (soft,), lambda g: (g,))


# ── softmax & reductions ───────────────────────────────────────


def softmax(x: Tensor, axis: int = -1, temperature: float = 1.0) -> Tensor:
    """Tempered softmax along ``axis``; masked (-inf) entries get weight 0.

    Raises:
        ShapeError: If some slice along ``axis`` is entirely -inf.
        ValueError: If ``temperature`` is not positive.
    """
    if temperature <= 0:
        raise ValueError(f"softmax temperature must be > 0, got {temperature}")
    xv = x.values
    if xv.shape[axis] == 0 or np.any(np.all(np.isneginf(xv), axis=axis)):
        raise ShapeError(f"softmax: all-masked axis {axis} in shape {x.shape}")
    z = xv / temperature
    z = z - np.max(z, axis=axis, keepdims=True)
    e = np.exp(z)
    out = e / np.sum(e, axis=axis, keepdims=True)

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        dot = np.sum(g * out, axis=axis, keepdims=True)
        return (out * (g - dot) / temperature,)

    return _result(out, (x,), vjp)


def sum(x: Tensor, axis: int | None = None) -> Tensor:
    out = np.sum(x.values, axis=axis)

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        gg = g if axis is None else np.expand_dims(g, axis)
        return (np.broadcast_to(gg, x.shape).copy(),)

    return _result(np.asarray(out), (x,), vjp)


def mean(x: Tensor, axis: int | None = None) -> Tensor:
    n = x.size if axis is None else x.shape[axis]
    out = np.mean(x.values, axis=axis)

    def vjp(g: np.ndarray) -> tuple[np.ndarray]:
        gg = g if axis is None else np.expand_dims(g, axis)
        return (np.broadcast_to(gg / n, x.shape).copy(),)

    return _result(np.asarray(out), (x,), vjp)


def layer_norm(x: Tensor, gain: Tensor, offset: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalise over the last axis, then apply per-feature gain and offset."""
    dim = x.shape[-1]
    if gain.shape != (dim,) or offset.shape != (dim,):
        raise ShapeError(
            f"layer_norm: gain {gain.shape} / offset {offset.shape} vs feature axis {dim}"
        )
    xv = x.values
    mu = xv.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(xv.var(axis=-1, keepdims=True) + eps)
    xhat = (xv - mu) * inv_std
    gv = gain.values
    out = xhat * gv + offset.values

    def vjp(g: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        lead = tuple(range(g.ndim - 1))
        g_gain = np.sum(g * xhat, axis=lead)
        g_offset = np.sum(g, axis=lead)
        gx_hat = g * gv
        gx = inv_std * (
            gx_hat
            - gx_hat.mean(axis=-1, keepdims=True)
            - xhat * (gx_hat * xhat).mean(axis=-1, keepdims=True)
        )
        return gx, g_gain, g_offset

    return _result(out, (x, gain, offset), vjp)
