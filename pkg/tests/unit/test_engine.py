"""Tests for the tensor engine: ops, tape, gradient checking and Adam."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
import pytest

from vita_rx.domain.exceptions import NumericalError, ShapeError
from vita_rx.engine import ops
from vita_rx.engine.gradcheck import grad_check
from vita_rx.engine.optim import AdamState, adam_step
from vita_rx.engine.tensor import Tape, Tensor, active_tape


def _param(rng: np.random.Generator, *shape: int, name: str = "w") -> Tensor:
    return Tensor(rng.normal(size=shape), requires_grad=True, name=name)


class TestTensor:
    """Tests for the Tensor wrapper."""

    def test_values_are_float64(self) -> None:
        t = Tensor([1, 2, 3])
        assert t.values.dtype == np.float64
        assert t.shape == (3,)
        assert t.ndim == 1

    def test_item_requires_single_element(self) -> None:
        assert Tensor(2.5).item() == 2.5
        with pytest.raises(ShapeError, match="single-element"):
            Tensor([1.0, 2.0]).item()

    def test_detach_shares_values_without_grad(self) -> None:
        t = Tensor(np.ones(2), requires_grad=True)
        d = t.detach()
        assert d.values is t.values
        assert not d.requires_grad


class TestTape:
    """Tests for recording and backpropagation."""

    def test_ops_outside_tape_are_constants(self) -> None:
        w = Tensor(np.ones(3), requires_grad=True)
        out = ops.sum(ops.mul(w, w))
        assert not out.requires_grad
        assert active_tape() is None

    def test_constant_inputs_are_not_recorded(self) -> None:
        with Tape() as tape:
            ops.add(ops.constant(np.ones(2)), ops.constant(np.ones(2)))
        assert len(tape) == 0

    def test_nested_tapes_restore_outer(self) -> None:
        with Tape() as outer:
            with Tape() as inner:
                assert active_tape() is inner
            assert active_tape() is outer
        assert active_tape() is None

    def test_backward_matches_analytic_gradient(self) -> None:
        w = Tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)
        with Tape() as tape:
            loss = ops.sum(ops.mul(w, w))
        tape.backward(loss)
        np.testing.assert_allclose(w.grad, 2 * w.values)

    def test_unused_leaf_gets_zero_gradient(self) -> None:
        a = Tensor(np.ones(2), requires_grad=True, name="a")
        b = Tensor(np.ones(2), requires_grad=True, name="b")
        with Tape() as tape:
            loss = ops.sum(a)
        grads = tape.gradient(loss, {"a": a, "b": b})
        np.testing.assert_array_equal(grads["b"], np.zeros(2))
        np.testing.assert_array_equal(grads["a"], np.ones(2))

    def test_shared_input_accumulates(self) -> None:
        x = Tensor(np.array([2.0]), requires_grad=True)
        with Tape() as tape:
            loss = ops.sum(ops.add(ops.scale(x, 3.0), ops.mul(x, x)))
        tape.backward(loss)
        np.testing.assert_allclose(x.grad, [3.0 + 4.0])

    def test_backward_needs_scalar(self) -> None:
        w = Tensor(np.ones(2), requires_grad=True)
        with Tape() as tape:
            out = ops.scale(w, 2.0)
        with pytest.raises(ShapeError, match="scalar"):
            tape.backward(out)


class TestOps:
    """Tests for forward values and shape discipline."""

    def test_no_implicit_broadcasting(self) -> None:
        with pytest.raises(ShapeError, match="add"):
            ops.add(Tensor(np.ones((2, 3))), Tensor(np.ones(3)))

    def test_repeat_makes_rows(self) -> None:
        out = ops.repeat(Tensor([1.0, 2.0]), 3)
        assert out.shape == (3, 2)
        np.testing.assert_array_equal(out.values[2], [1.0, 2.0])

    def test_matmul_shape_mismatch(self) -> None:
        with pytest.raises(ShapeError, match="matmul"):
            ops.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))

    def test_reshape_size_mismatch(self) -> None:
        with pytest.raises(ShapeError, match="reshape"):
            ops.reshape(Tensor(np.ones(6)), (4, 2))

    def test_softmax_rows_sum_to_one(self, rng: np.random.Generator) -> None:
        out = ops.softmax(Tensor(rng.normal(size=(4, 5)) * 30), axis=-1)
        np.testing.assert_allclose(out.values.sum(axis=-1), np.ones(4))

    def test_softmax_masked_entries_get_zero(self) -> None:
        out = ops.softmax(Tensor([0.0, -np.inf, 1.0]))
        assert out.values[1] == 0.0
        assert out.values.sum() == pytest.approx(1.0)

    def test_softmax_all_masked_raises(self) -> None:
        with pytest.raises(ShapeError, match="all-masked"):
            ops.softmax(Tensor([-np.inf, -np.inf]))

    def test_softmax_temperature_must_be_positive(self) -> None:
        with pytest.raises(ValueError, match="temperature"):
            ops.softmax(Tensor([1.0, 2.0]), temperature=0.0)

    def test_low_temperature_sharpens(self) -> None:
        x = Tensor([1.0, 2.0])
        assert ops.softmax(x, temperature=0.2).values[1] > ops.softmax(x).values[1]

    def test_sigmoid_is_stable_for_large_inputs(self) -> None:
        out = ops.sigmoid(Tensor([-1000.0, 0.0, 1000.0]))
        np.testing.assert_allclose(out.values, [0.0, 0.5, 1.0])

    def test_straight_through_forward_and_backward(self) -> None:
        soft = Tensor(np.array([0.3, 0.8]), requires_grad=True)
        with Tape() as tape:
            hard = ops.straight_through(np.array([0.0, 1.0]), soft)
            loss = ops.sum(ops.scale(hard, 2.0))
        tape.backward(loss)
        np.testing.assert_array_equal(hard.values, [0.0, 1.0])
        np.testing.assert_array_equal(soft.grad, [2.0, 2.0])

    def test_masked_fill_blocks_gradient(self) -> None:
        x = Tensor(np.ones(3), requires_grad=True)
        mask = np.array([False, True, False])
        with Tape() as tape:
            loss = ops.sum(ops.masked_fill(x, mask, 0.0))
        tape.backward(loss)
        np.testing.assert_array_equal(x.grad, [1.0, 0.0, 1.0])

    def test_clamp_passes_gradient_inside_bounds_only(self) -> None:
        x = Tensor(np.array([-1.0, 0.5, 2.0]), requires_grad=True)
        with Tape() as tape:
            loss = ops.sum(ops.clamp(x, lo=0.0, hi=1.0))
        tape.backward(loss)
        np.testing.assert_array_equal(x.grad, [0.0, 1.0, 0.0])

    def test_layer_norm_normalises_rows(self, rng: np.random.Generator) -> None:
        x = Tensor(rng.normal(size=(3, 4)) * 5 + 2)
        out = ops.layer_norm(x, Tensor(np.ones(4)), Tensor(np.zeros(4)))
        np.testing.assert_allclose(out.values.mean(axis=-1), np.zeros(3), atol=1e-10)
        np.testing.assert_allclose(out.values.std(axis=-1), np.ones(3), atol=1e-3)


class TestGradCheck:
    """Finite-difference checks of every differentiable primitive."""

    def test_matmul_tanh_sigmoid(self, rng: np.random.Generator) -> None:
        a, b = _param(rng, 3, 4, name="a"), _param(rng, 4, 2, name="b")

        def f() -> Tensor:
            return ops.sum(ops.sigmoid(ops.tanh(ops.matmul(a, b))))

        assert grad_check(f, {"a": a, "b": b}) < 1e-5

    def test_vector_matmul(self, rng: np.random.Generator) -> None:
        v, m = _param(rng, 3, name="v"), _param(rng, 3, 2, name="m")

        def f() -> Tensor:
            return ops.sum(ops.exp(ops.matmul(v, m)))

        assert grad_check(f, {"v": v, "m": m}) < 1e-5

    def test_softmax_with_temperature(self, rng: np.random.Generator) -> None:
        x, w = _param(rng, 2, 5, name="x"), Tensor(rng.normal(size=(2, 5)))

        def f() -> Tensor:
            return ops.sum(ops.mul(ops.softmax(x, axis=-1, temperature=0.5), w))

        assert grad_check(f, {"x": x}) < 1e-5

    def test_layer_norm(self, rng: np.random.Generator) -> None:
        x = _param(rng, 3, 4, name="x")
        gain, offset = _param(rng, 4, name="gain"), _param(rng, 4, name="offset")
        w = Tensor(rng.normal(size=(3, 4)))

        def f() -> Tensor:
            return ops.sum(ops.mul(ops.layer_norm(x, gain, offset), w))

        assert grad_check(f, {"x": x, "gain": gain, "offset": offset}) < 1e-5

    def test_structural_ops(self, rng: np.random.Generator) -> None:
        a, b = _param(rng, 2, 3, name="a"), _param(rng, 3, name="b")

        def f() -> Tensor:
            stacked = ops.stack([b, ops.take_rows(a, 0)])
            joined = ops.concat([stacked, ops.transpose(ops.reshape(a, (3, 2)))], axis=-1)
            picked = ops.take_rows(joined, [1, 1, 0])
            return ops.sum(ops.mul(picked, picked))

        assert grad_check(f, {"a": a, "b": b}) < 1e-5

    def test_scale_by_tensor_and_log(self, rng: np.random.Generator) -> None:
        x = Tensor(rng.uniform(0.5, 2.0, size=4), requires_grad=True, name="x")
        c = Tensor(np.asarray(0.7), requires_grad=True, name="c")

        def f() -> Tensor:
            return ops.mean(ops.log(ops.scale(x, c)))

        assert grad_check(f, {"x": x, "c": c}) < 1e-5

    def test_non_finite_function_raises(self) -> None:
        x = Tensor(np.array([-1.0]), requires_grad=True)
        with pytest.raises(NumericalError):
            grad_check(lambda: ops.sum(ops.log(x)), {"x": x})


_UNARY = (
    ops.tanh,
    ops.sigmoid,
    ops.transpose,
    lambda x: ops.exp(ops.tanh(x)),
    lambda x: ops.log(ops.sigmoid(x)),
    lambda x: ops.softmax(x, axis=-1),
    lambda x: ops.scale(x, 0.5),
    lambda x: ops.take_rows(x, [2, 0, 0]),
)
_BINARY = (
    ops.add,
    ops.sub,
    ops.mul,
    lambda a, b: ops.scale(ops.matmul(a, b), 0.5),
)


def _random_graph(
    rng: np.random.Generator, leaves: list[Tensor], weight: Tensor
) -> Callable[[], Tensor]:
    """A fixed random plan of 2-6 ops over 3x3 tensors, replayed on every call."""
    plan: list[tuple[Callable[..., Tensor], tuple[int, ...]]] = []
    size = len(leaves)
    for _ in range(int(rng.integers(2, 7))):
        if rng.random() < 0.5:
            op = _UNARY[int(rng.integers(len(_UNARY)))]
            plan.append((op, (int(rng.integers(size)),)))
        else:
            op = _BINARY[int(rng.integers(len(_BINARY)))]
            plan.append((op, (int(rng.integers(size)), int(rng.integers(size)))))
        size += 1

    def f() -> Tensor:
        nodes = list(leaves)
        for op, inputs in plan:
            nodes.append(op(*(nodes[i] for i in inputs)))
        return ops.sum(ops.mul(nodes[-1], weight))

    return f


class TestRandomGraphs:
    """Backward over randomly composed graphs agrees with finite differences."""

    def test_hundred_random_graphs(self) -> None:
        rng = np.random.default_rng(77)
        for trial in range(100):
            leaves = [
                Tensor(rng.uniform(-1.0, 1.0, size=(3, 3)), requires_grad=True, name=f"x{i}")
                for i in range(int(rng.integers(1, 4)))
            ]
            weight = Tensor(rng.normal(size=(3, 3)))
            f = _random_graph(rng, leaves, weight)
            error = grad_check(f, {t.name: t for t in leaves}, h=1e-5, floor=1e-4)
            assert error < 1e-4, f"graph {trial}: relative error {error:.2e}"


class TestAdam:
    """Tests for the Adam update."""

    def test_first_step_moves_by_learning_rate(self) -> None:
        w = Tensor(np.array([1.0, -1.0]), requires_grad=True)
        state = AdamState.for_params({"w": w}, lr=0.1)
        adam_step({"w": w}, {"w": np.array([0.5, -2.0])}, state)
        np.testing.assert_allclose(w.values, [0.9, -0.9], atol=1e-6)
        assert state.step == 1

    def test_minimises_quadratic(self) -> None:
        w = Tensor(np.array([3.0, -2.0]), requires_grad=True)
        state = AdamState.for_params({"w": w}, lr=0.1)
        for _ in range(500):
            with Tape() as tape:
                loss = ops.sum(ops.mul(w, w))
            adam_step({"w": w}, tape.gradient(loss, {"w": w}), state)
        np.testing.assert_allclose(w.values, [0.0, 0.0], atol=1e-2)

    def test_non_finite_gradient_rejects_whole_step(self) -> None:
        a = Tensor(np.ones(2), requires_grad=True)
        b = Tensor(np.ones(2), requires_grad=True)
        state = AdamState.for_params({"a": a, "b": b})
        with pytest.raises(NumericalError, match="'b'"):
            adam_step(
                {"a": a, "b": b},
                {"a": np.ones(2), "b": np.array([np.nan, 0.0])},
                state,
            )
        np.testing.assert_array_equal(a.values, np.ones(2))
        assert state.step == 0

    def test_gradient_shape_mismatch(self) -> None:
        w = Tensor(np.ones(2), requires_grad=True)
        with pytest.raises(ValueError, match="shape"):
            adam_step({"w": w}, {"w": np.ones(3)}, AdamState.for_params({"w": w}))
