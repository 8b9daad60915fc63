"""Tests for differentiable tensor operations."""

import numpy as np
import pytest

from selfclassifier.core import ops
from selfclassifier.core.ops import Axis, BatchNormState, Mode
from selfclassifier.core.tensor import Graph, Tensor, backward
from selfclassifier.exceptions import (
    BatchTooSmallError,
    DegenerateSliceError,
    DimensionError,
    DomainError,
    NonFiniteError,
    ParameterError,
)
from selfclassifier.services.grad_check import gradient_errors

rng = np.random.default_rng(1234)


def _leaf(shape, low=None, high=None):
    if low is None:
        return Tensor(rng.standard_normal(shape), requires_grad=True)
    return Tensor(rng.uniform(low, high, size=shape), requires_grad=True)


def _weighted_sum(out: Tensor, weights: np.ndarray) -> Tensor:
    return ops.reduce(ops.mul(out, ops.constant(weights)), "sum")


def test_softmax_rows_and_columns_sum_to_one():
    """Test both slicing directions of softmax."""
    x = Tensor(rng.standard_normal((5, 3)))
    rows = ops.softmax_axis(x, Axis.ROWS, temperature=0.1)
    cols = ops.softmax_axis(x, Axis.COLS, temperature=0.05)
    np.testing.assert_allclose(rows.data.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(cols.data.sum(axis=0), 1.0, atol=1e-12)


def test_softmax_is_shift_stable():
    """Test that very large logits do not overflow."""
    x = Tensor(np.array([[1000.0, 0.0], [0.0, 1000.0]]))
    out = ops.softmax_axis(x, Axis.ROWS)
    np.testing.assert_allclose(out.data, np.eye(2), atol=1e-12)


@pytest.mark.parametrize("temperature", [0.0, -1.0])
def test_softmax_rejects_non_positive_temperature(temperature):
    """Test ParameterError for temperature <= 0."""
    with pytest.raises(ParameterError):
        ops.softmax_axis(Tensor(np.ones((2, 2))), Axis.ROWS, temperature)


def test_l1_normalize():
    """Test slices summing to one and the error cases."""
    x = Tensor(np.array([[1.0, 3.0], [2.0, 2.0]]))
    np.testing.assert_allclose(ops.l1_normalize_axis(x, Axis.ROWS).data, [[0.25, 0.75], [0.5, 0.5]])
    with pytest.raises(ParameterError):
        ops.l1_normalize_axis(Tensor(np.array([[1.0, -1.0]])), Axis.ROWS)
    with pytest.raises(DegenerateSliceError):
        ops.l1_normalize_axis(Tensor(np.array([[0.0, 0.0], [1.0, 1.0]])), Axis.ROWS)


def test_l2_normalize_rows():
    """Test unit row norms and the zero-row error."""
    out = ops.l2_normalize_rows(Tensor(rng.standard_normal((4, 3))))
    np.testing.assert_allclose(np.linalg.norm(out.data, axis=1), 1.0, atol=1e-12)
    with pytest.raises(DegenerateSliceError):
        ops.l2_normalize_rows(Tensor(np.array([[0.0, 0.0], [1.0, 0.0]])))


def test_log_domain():
    """Test DomainError on non-positive inputs."""
    with pytest.raises(DomainError):
        ops.log(Tensor(np.array([[1.0, 0.0]])))


def test_matmul_shapes():
    """Test plain and transposed products and the inner-dimension check."""
    a = Tensor(rng.standard_normal((3, 2)))
    b = Tensor(rng.standard_normal((4, 2)))
    np.testing.assert_allclose(ops.matmul(a, b, transpose_b=True).data, a.data @ b.data.T)
    with pytest.raises(DimensionError):
        ops.matmul(a, b)


def test_non_finite_result_raises():
    """Test that an overflowing product is reported."""
    with pytest.raises(NonFiniteError):
        ops.matmul(Tensor([[1e308]]), Tensor([[10.0]]))


def test_reduce_shapes():
    """Test output shapes of every reduction axis."""
    x = Tensor(np.arange(6.0).reshape(2, 3))
    assert ops.reduce(x, "sum", Axis.ROWS).shape == (2, 1)
    assert ops.reduce(x, "mean", Axis.COLS).shape == (1, 3)
    assert ops.reduce(x, "sum").item() == 15.0
    assert ops.reduce(x, "mean").item() == 2.5


def test_pointwise_dispatch():
    """Test the dispatcher against the direct ops."""
    x = Tensor(np.array([[-2.0, 3.0]]))
    np.testing.assert_array_equal(ops.pointwise(x, "leaky_relu", param=0.1).data, [[-0.2, 3.0]])
    np.testing.assert_array_equal(ops.pointwise(x, "scale", param=2.0).data, [[-4.0, 6.0]])
    with pytest.raises(ParameterError):
        ops.pointwise(x, "tanh")


def test_batch_norm_train_and_eval():
    """Test batch standardization, running-stat updates and eval mode."""
    x = Tensor(rng.standard_normal((16, 3)) * 2.0 + 5.0)
    gamma = Tensor(np.ones((1, 3)))
    beta = Tensor(np.zeros((1, 3)))
    state = BatchNormState(3)

    out = ops.batch_norm(x, gamma, beta, state, Mode.TRAIN)
    np.testing.assert_allclose(out.data.mean(axis=0), 0.0, atol=1e-10)
    np.testing.assert_allclose(state.running_mean, 0.1 * x.data.mean(axis=0, keepdims=True))

    frozen_mean = state.running_mean.copy()
    evaluated = ops.batch_norm(x, gamma, beta, state, Mode.EVAL)
    np.testing.assert_array_equal(state.running_mean, frozen_mean)
    expected = (x.data - state.running_mean) / np.sqrt(state.running_var + 1e-5)
    np.testing.assert_allclose(evaluated.data, expected)


def test_batch_norm_needs_two_rows_in_train_mode():
    """Test BatchTooSmallError for N = 1."""
    state = BatchNormState(2)
    with pytest.raises(BatchTooSmallError):
        ops.batch_norm(Tensor(np.ones((1, 2))), Tensor(np.ones((1, 2))), Tensor(np.zeros((1, 2))), state)


@pytest.mark.parametrize(
    "build,inputs",
    [
        (lambda t: ops.matmul(t[0], t[1], transpose_b=True), [(3, 4), (5, 4)]),
        (lambda t: ops.matmul(t[0], t[1]), [(3, 4), (4, 2)]),
        (lambda t: ops.softmax_axis(t[0], Axis.ROWS, 0.5), [(4, 3)]),
        (lambda t: ops.softmax_axis(t[0], Axis.COLS, 0.5), [(4, 3)]),
        (lambda t: ops.l2_normalize_rows(t[0]), [(4, 3)]),
        (lambda t: ops.leaky_relu(t[0], 0.01), [(4, 3)]),
        (lambda t: ops.mul(t[0], t[1]), [(3, 3), (3, 3)]),
        (lambda t: ops.add(t[0], t[1]), [(3, 3), (3, 3)]),
        (lambda t: ops.reduce(t[0], "mean", Axis.ROWS), [(3, 4)]),
    ],
)
def test_component_gradients(build, inputs):
    """Test every op's backward against central differences."""
    tensors = [_leaf(shape) for shape in inputs]
    out_shape = build(tensors).shape
    weights = rng.standard_normal(out_shape)
    errors = gradient_errors(lambda t: _weighted_sum(build(t), weights), tensors)
    assert max(errors) < 1e-4


@pytest.mark.parametrize("axis", [Axis.ROWS, Axis.COLS])
def test_l1_normalize_gradient(axis):
    """Test the L1 normalization backward on positive inputs."""
    x = _leaf((4, 3), 0.5, 2.0)
    weights = rng.standard_normal((4, 3))
    errors = gradient_errors(lambda t: _weighted_sum(ops.l1_normalize_axis(t[0], axis), weights), [x])
    assert errors[0] < 1e-4


def test_log_gradient():
    """Test the log backward on positive inputs."""
    x = _leaf((3, 3), 0.5, 2.0)
    weights = rng.standard_normal((3, 3))
    assert gradient_errors(lambda t: _weighted_sum(ops.log(t[0]), weights), [x])[0] < 1e-4


@pytest.mark.parametrize("mode", [Mode.TRAIN, Mode.EVAL])
def test_batch_norm_gradient(mode):
    """Test the batch-norm backward for input, gamma and beta."""
    x = _leaf((6, 3))
    gamma = _leaf((1, 3), 0.5, 1.5)
    beta = _leaf((1, 3))
    state = BatchNormState(3)
    state.running_mean = rng.standard_normal((1, 3))
    state.running_var = rng.uniform(0.5, 2.0, size=(1, 3))
    weights = rng.standard_normal((6, 3))

    def build(t):
        return _weighted_sum(ops.batch_norm(t[0], t[1], t[2], state, mode), weights)

    errors = gradient_errors(build, [x, gamma, beta])
    assert max(errors) < 1e-4


# ============================================
# INVARIANCES AND RANDOMIZED GRADIENT CHECKS
# ============================================


@pytest.mark.parametrize("axis", [Axis.ROWS, Axis.COLS])
def test_softmax_shift_invariance(axis):
    """Test that adding a constant to every slice leaves softmax unchanged."""
    local = np.random.default_rng(7)
    x = local.standard_normal((5, 4))
    np_axis = 1 if axis is Axis.ROWS else 0
    shape = (5, 1) if np_axis == 1 else (1, 4)
    shifted = x + local.uniform(-50.0, 50.0, size=shape)
    base = ops.softmax_axis(Tensor(x), axis, temperature=0.1).data
    moved = ops.softmax_axis(Tensor(shifted), axis, temperature=0.1).data
    np.testing.assert_allclose(moved, base, atol=1e-12)


@pytest.mark.parametrize("scale", [1e-30, 1e-200, 1e-290])
def test_l1_normalize_tiny_slices_sum_to_one(scale):
    """Test that slices with very small but non-zero sums are normalized exactly."""
    x = Tensor(scale * np.array([[1.0, 3.0], [2.0, 2.0]]))
    out = ops.l1_normalize_axis(x, Axis.ROWS).data
    np.testing.assert_allclose(out, [[0.25, 0.75], [0.5, 0.5]], rtol=1e-12)


def test_fan_out_gradients_accumulate():
    """Test that a tensor feeding two consumers receives the sum of both gradients."""
    x = Tensor(np.array([[1.0, -2.0], [0.5, 3.0]]), requires_grad=True)
    with Graph():
        y = ops.add(ops.mul(x, x), ops.scale(x, 3.0))
        backward(ops.reduce(y, "sum"))
    np.testing.assert_allclose(x.grad, 2.0 * x.data + 3.0)


def test_fan_out_through_softmax_matches_finite_differences():
    """Test a shared input used by both softmax directions and a log."""
    x = Tensor(np.random.default_rng(11).standard_normal((4, 3)), requires_grad=True)

    def build(t):
        rows = ops.softmax_axis(t[0], Axis.ROWS, 0.5)
        cols = ops.softmax_axis(t[0], Axis.COLS, 0.25)
        return ops.reduce(ops.mul(cols, ops.log(rows)), "sum")

    assert gradient_errors(build, [x])[0] < 1e-4


def _away_from_zero(local, shape):
    x = local.standard_normal(shape)
    return np.sign(x) * (np.abs(x) + 0.05)


RANDOM_OP_CASES = {
    "matmul": (lambda t: ops.matmul(t[0], t[1]), lambda r: [r.standard_normal((5, 3)), r.standard_normal((3, 4))]),
    "matmul_t": (
        lambda t: ops.matmul(t[0], t[1], transpose_b=True),
        lambda r: [r.standard_normal((3, 4)), r.standard_normal((5, 4))],
    ),
    "softmax_rows": (lambda t: ops.softmax_axis(t[0], Axis.ROWS, 0.5), lambda r: [r.standard_normal((4, 6))]),
    "softmax_cols": (lambda t: ops.softmax_axis(t[0], Axis.COLS, 0.5), lambda r: [r.standard_normal((4, 6))]),
    "l1_rows": (lambda t: ops.l1_normalize_axis(t[0], Axis.ROWS), lambda r: [r.uniform(0.1, 2.0, (3, 5))]),
    "l1_cols": (lambda t: ops.l1_normalize_axis(t[0], Axis.COLS), lambda r: [r.uniform(0.1, 2.0, (3, 5))]),
    "l2_rows": (lambda t: ops.l2_normalize_rows(t[0]), lambda r: [_away_from_zero(r, (4, 8))]),
    "log": (lambda t: ops.log(t[0]), lambda r: [r.uniform(0.2, 3.0, (3, 3))]),
    "leaky_relu": (lambda t: ops.leaky_relu(t[0], 0.01), lambda r: [_away_from_zero(r, (3, 4))]),
    "mul": (lambda t: ops.mul(t[0], t[1]), lambda r: [r.standard_normal((3, 3)), r.standard_normal((3, 3))]),
    "reduce_cols": (lambda t: ops.reduce(t[0], "mean", Axis.COLS), lambda r: [r.standard_normal((3, 4))]),
}


@pytest.mark.parametrize("name", sorted(RANDOM_OP_CASES))
def test_op_gradients_on_random_instances(name):
    """Test each op's backward against central differences on 100 random instances."""
    build, make_inputs = RANDOM_OP_CASES[name]
    for seed in range(100):
        local = np.random.default_rng(seed)
        tensors = [Tensor(array, requires_grad=True) for array in make_inputs(local)]
        weights = local.standard_normal(build(tensors).shape)
        errors = gradient_errors(lambda t: _weighted_sum(build(t), weights), tensors)
        assert max(errors) < 1e-4, f"seed {seed}: {errors}"


def test_batch_norm_gradient_on_random_instances():
    """Test the train-mode batch-norm backward on 100 random 16x4 batches."""
    for seed in range(100):
        local = np.random.default_rng(seed)
        x = Tensor(local.standard_normal((16, 4)), requires_grad=True)
        gamma = Tensor(local.uniform(0.5, 1.5, (1, 4)), requires_grad=True)
        beta = Tensor(local.standard_normal((1, 4)), requires_grad=True)
        weights = local.standard_normal((16, 4))

        def build(t):
            return _weighted_sum(ops.batch_norm(t[0], t[1], t[2], BatchNormState(4), Mode.TRAIN), weights)

        assert max(gradient_errors(build, [x, gamma, beta])) < 1e-3, f"seed {seed}"
