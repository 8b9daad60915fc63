"""
Differentiable operations on 2-D tensors.

Each op computes its forward value with numpy, checks that the result is
finite, and (inside an active Graph) records a closure that maps the upstream
gradient to one gradient per input. The closures delegate to module-level
``_*_backward`` helpers.

Axis convention: ``Axis.ROWS`` means every row is one slice (numpy axis 1),
``Axis.COLS`` means every column is one slice (numpy axis 0).
"""

from enum import Enum
from typing import Optional

import numpy as np

from selfclassifier.core.tensor import Tensor, emit
from selfclassifier.exceptions import (
    BatchTooSmallError,
    DegenerateSliceError,
    DimensionError,
    DomainError,
    NonFiniteError,
    ParameterError,
)

DEGENERATE_SUM = 1e-300
L2_EPS = 1e-12


class Axis(str, Enum):
    """Slicing direction of an axis-wise op."""

    ROWS = "rows"
    COLS = "cols"
    ALL = "all"


class Mode(str, Enum):
    """Forward mode for layers with batch statistics."""

    TRAIN = "train"
    EVAL = "eval"


def _np_axis(axis: Axis) -> int:
    axis = Axis(axis)
    if axis is Axis.ROWS:
        return 1
    if axis is Axis.COLS:
        return 0
    raise ParameterError("axis 'all' is only valid for reduce")


def _check_finite(op: str, array: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(array)):
        raise NonFiniteError(f"{op} produced non-finite values")
    return array


def _check_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} differ")


def constant(array) -> Tensor:
    """Tensor that never requires a gradient."""
    return Tensor(array, requires_grad=False)


# ============================================
# MATRIX PRODUCT
# ============================================


def _matmul_backward(a: np.ndarray, b: np.ndarray, g: np.ndarray, transpose_b: bool):
    if transpose_b:
        return g @ b, g.T @ a
    return g @ b.T, a.T @ g


def matmul(a: Tensor, b: Tensor, transpose_b: bool = False) -> Tensor:
    """
    Matrix product a·b, or a·bᵀ when transpose_b is set.

    Raises:
        DimensionError: If the inner dimensions disagree
    """
    inner_b = b.cols if transpose_b else b.rows
    if a.cols != inner_b:
        raise DimensionError(
            f"matmul: inner dimensions differ ({a.shape} x {b.shape}, transpose_b={transpose_b})"
        )
    rhs = b.data.T if transpose_b else b.data
    result = _check_finite("matmul", a.data @ rhs)
    return emit(
        "matmul",
        (a, b),
        result,
        lambda g: _matmul_backward(a.data, b.data, g, transpose_b),
    )


# ============================================
# SOFTMAX / NORMALIZATION
# ============================================


def _softmax_backward(out: np.ndarray, g: np.ndarray, np_axis: int, temperature: float):
    dot = np.sum(g * out, axis=np_axis, keepdims=True)
    return (out * (g - dot) / temperature,)


def softmax_axis(x: Tensor, axis: Axis, temperature: float = 1.0) -> Tensor:
    """
    Softmax of x/temperature over each slice along axis (max-shifted).

    Raises:
        ParameterError: If temperature is not positive
    """
    if not temperature > 0:
        raise ParameterError(f"softmax temperature must be positive, got {temperature}")
    np_axis = _np_axis(axis)
    shifted = (x.data - x.data.max(axis=np_axis, keepdims=True)) / temperature
    exp = np.exp(shifted)
    result = _check_finite("softmax", exp / exp.sum(axis=np_axis, keepdims=True))
    return emit(
        "softmax",
        (x,),
        result,
        lambda g: _softmax_backward(result, g, np_axis, temperature),
    )


def _l1_normalize_backward(out: np.ndarray, denom: np.ndarray, g: np.ndarray, np_axis: int):
    dot = np.sum(g * out, axis=np_axis, keepdims=True)
    return ((g - dot) / denom,)


def l1_normalize_axis(x: Tensor, axis: Axis) -> Tensor:
    """
    Divide every slice along axis by its sum, so each slice sums to 1.

    Each slice is divided by its exact sum, however small. Only a sum below
    1e-300 counts as a true zero; it signals a dead class or sample and is
    rejected.

    Raises:
        ParameterError: If any entry is negative
        DegenerateSliceError: If a slice sums to zero
    """
    if np.any(x.data < 0):
        raise ParameterError("l1_normalize_axis needs non-negative entries")
    np_axis = _np_axis(axis)
    raw = x.data.sum(axis=np_axis, keepdims=True)
    if np.any(raw < DEGENERATE_SUM):
        dead = np.flatnonzero(raw.ravel() < DEGENERATE_SUM)
        kind = "sample rows" if np_axis == 1 else "class columns"
        raise DegenerateSliceError(f"zero-sum {kind} at indices {dead.tolist()}")
    result = _check_finite("l1_normalize", x.data / raw)
    return emit(
        "l1_normalize",
        (x,),
        result,
        lambda g: _l1_normalize_backward(result, raw, g, np_axis),
    )


def _l2_normalize_backward(out: np.ndarray, norms: np.ndarray, g: np.ndarray):
    dot = np.sum(g * out, axis=1, keepdims=True)
    return ((g - out * dot) / norms,)


def l2_normalize_rows(x: Tensor) -> Tensor:
    """
    Scale every row to unit Euclidean norm.

    Raises:
        DegenerateSliceError: If a row norm is not above 1e-12
    """
    norms = np.linalg.norm(x.data, axis=1, keepdims=True)
    if np.any(norms <= L2_EPS):
        dead = np.flatnonzero(norms.ravel() <= L2_EPS)
        raise DegenerateSliceError(f"near-zero rows at indices {dead.tolist()}")
    result = _check_finite("l2_normalize", x.data / norms)
    return emit(
        "l2_normalize",
        (x,),
        result,
        lambda g: _l2_normalize_backward(result, norms, g),
    )


# ============================================
# POINTWISE
# ============================================


def _log_backward(x: np.ndarray, g: np.ndarray):
    return (g / x,)


def log(x: Tensor) -> Tensor:
    """
    Natural log, elementwise.

    Raises:
        DomainError: If any entry is <= 0
    """
    if np.any(x.data <= 0):
        raise DomainError("log of a non-positive entry")
    result = _check_finite("log", np.log(x.data))
    return emit("log", (x,), result, lambda g: _log_backward(x.data, g))


def _leaky_relu_backward(x: np.ndarray, g: np.ndarray, slope: float):
    return (np.where(x > 0, g, slope * g),)


def leaky_relu(x: Tensor, slope: float = 0.01) -> Tensor:
    result = np.where(x.data > 0, x.data, slope * x.data)
    return emit("leaky_relu", (x,), result, lambda g: _leaky_relu_backward(x.data, g, slope))


def scale(x: Tensor, k: float) -> Tensor:
    """Multiply every entry by the constant k."""
    result = _check_finite("scale", x.data * k)
    return emit("scale", (x,), result, lambda g: (g * k,))


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise (Hadamard) product of equal-shape tensors."""
    _check_same_shape("mul", a, b)
    result = _check_finite("mul", a.data * b.data)
    return emit("mul", (a, b), result, lambda g: (g * b.data, g * a.data))


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum of equal-shape tensors."""
    _check_same_shape("add", a, b)
    result = _check_finite("add", a.data + b.data)
    return emit("add", (a, b), result, lambda g: (g, g))


def pointwise(
    x: Tensor,
    kind: str,
    other: Optional[Tensor] = None,
    param: Optional[float] = None,
) -> Tensor:
    """
    Dispatch to one of the pointwise ops by name.

    Args:
        x: Input tensor
        kind: "log", "leaky_relu", "scale", "mul" or "add"
        other: Second operand for mul/add
        param: Slope for leaky_relu, factor for scale

    Returns:
        Result tensor
    """
    if kind == "log":
        return log(x)
    if kind == "leaky_relu":
        return leaky_relu(x, 0.01 if param is None else param)
    if kind == "scale":
        if param is None:
            raise ParameterError("scale needs a factor")
        return scale(x, param)
    if kind in ("mul", "add"):
        if other is None:
            raise ParameterError(f"{kind} needs a second operand")
        return mul(x, other) if kind == "mul" else add(x, other)
    raise ParameterError(f"Unknown pointwise kind: {kind}")


# ============================================
# REDUCTIONS
# ============================================


def reduce(x: Tensor, kind: str = "sum", axis: Axis = Axis.ALL) -> Tensor:
    """
    Sum or mean over every slice along axis, or over all entries.

    Returns a (rows x 1) tensor for ROWS, (1 x cols) for COLS and 1x1 for ALL.
    """
    axis = Axis(axis)
    if kind not in ("sum", "mean"):
        raise ParameterError(f"Unknown reduction: {kind}")

    if axis is Axis.ALL:
        count = x.data.size
        result = np.array([[x.data.sum()]])
    else:
        np_axis = _np_axis(axis)
        count = x.data.shape[np_axis]
        result = x.data.sum(axis=np_axis, keepdims=True)
    factor = 1.0 / count if kind == "mean" else 1.0
    result = _check_finite("reduce", result * factor)
    return emit(
        f"reduce_{kind}",
        (x,),
        result,
        lambda g: (np.broadcast_to(g * factor, x.data.shape).copy(),),
    )


# ============================================
# BATCH NORMALIZATION
# ============================================


class BatchNormState:
    """Running statistics of one batch-norm layer."""

    def __init__(self, num_features: int):
        self.running_mean = np.zeros((1, num_features))
        self.running_var = np.ones((1, num_features))

    @property
    def num_features(self) -> int:
        return self.running_mean.shape[1]


def _batch_norm_backward(xhat: np.ndarray, inv_std: np.ndarray, gamma: np.ndarray, g: np.ndarray):
    n = xhat.shape[0]
    dxhat = g * gamma
    dx = (inv_std / n) * (
        n * dxhat - dxhat.sum(axis=0, keepdims=True) - xhat * (dxhat * xhat).sum(axis=0, keepdims=True)
    )
    return dx, (g * xhat).sum(axis=0, keepdims=True), g.sum(axis=0, keepdims=True)


def _batch_norm_eval_backward(xhat: np.ndarray, inv_std: np.ndarray, gamma: np.ndarray, g: np.ndarray):
    return g * gamma * inv_std, (g * xhat).sum(axis=0, keepdims=True), g.sum(axis=0, keepdims=True)


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    state: BatchNormState,
    mode: Mode = Mode.TRAIN,
    eps: float = 1e-5,
    momentum: float = 0.1,
) -> Tensor:
    """
    Per-feature standardization followed by a learnable affine map.

    Train mode normalizes with the biased batch variance and folds the batch
    mean and unbiased variance into the running stats with the given
    momentum; eval mode normalizes with the running stats.

    Args:
        x: N x D input
        gamma: 1 x D learnable scale
        beta: 1 x D learnable shift
        state: Running statistics, updated in train mode
        mode: Mode.TRAIN or Mode.EVAL
        eps: Variance floor
        momentum: Weight of the current batch in the running stats

    Raises:
        BatchTooSmallError: If N < 2 in train mode
        DimensionError: If feature counts disagree
    """
    mode = Mode(mode)
    features = x.cols
    if gamma.shape != (1, features) or beta.shape != (1, features):
        raise DimensionError(f"batch_norm: affine params must be 1x{features}")
    if state.num_features != features:
        raise DimensionError(f"batch_norm: state has {state.num_features} features, input {features}")

    if mode is Mode.TRAIN:
        n = x.rows
        if n < 2:
            raise BatchTooSmallError(f"batch_norm in train mode needs N >= 2, got {n}")
        mean = x.data.mean(axis=0, keepdims=True)
        var = x.data.var(axis=0, keepdims=True)
        state.running_mean = (1 - momentum) * state.running_mean + momentum * mean
        state.running_var = (1 - momentum) * state.running_var + momentum * var * n / (n - 1)
    else:
        mean = state.running_mean
        var = state.running_var

    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean) * inv_std
    result = _check_finite("batch_norm", xhat * gamma.data + beta.data)

    def _backward(g):
        if mode is Mode.TRAIN:
            return _batch_norm_backward(xhat, inv_std, gamma.data, g)
        return _batch_norm_eval_backward(xhat, inv_std, gamma.data, g)

    return emit("batch_norm", (x, gamma, beta), result, _backward)
