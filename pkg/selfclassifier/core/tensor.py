"""Dense 2-D tensor and the tape that records operations for reverse-mode autodiff."""

from contextvars import ContextVar
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from selfclassifier.exceptions import DimensionError, GraphError, ShapeError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_active_graph: ContextVar[Optional["Graph"]] = ContextVar("active_graph", default=None)


class Tensor:
    """
    Row-major 2-D matrix of float64 values with an optional gradient buffer.

    Leaves are created directly; every other tensor is the output of an op in
    `selfclassifier.core.ops`. A grad buffer exists iff requires_grad is set.
    """

    __slots__ = ("data", "requires_grad", "grad", "name", "_graph")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        array = np.array(data, dtype=np.float64)
        if array.ndim == 0:
            array = array.reshape(1, 1)
        elif array.ndim == 1:
            array = array.reshape(1, -1)
        elif array.ndim != 2:
            raise DimensionError(f"Tensor must be 2-D, got {array.ndim} dimensions")
        self.data: np.ndarray = array
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = np.zeros_like(array) if requires_grad else None
        self.name = name
        self._graph: Optional[Graph] = None

    @classmethod
    def _from_op(cls, array: np.ndarray) -> "Tensor":
        """Wrap an op result without copying."""
        out = cls.__new__(cls)
        out.data = array
        out.requires_grad = False
        out.grad = None
        out.name = None
        out._graph = None
        return out

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape  # type: ignore[return-value]

    @property
    def is_leaf(self) -> bool:
        return self._graph is None

    def item(self) -> float:
        """Return the value of a 1x1 tensor as a Python float."""
        if self.shape != (1, 1):
            raise ShapeError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.data[0, 0])

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad.fill(0.0)

    def __repr__(self):
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"


class Node:
    """One recorded op: its inputs, its output and how to push gradients back."""

    __slots__ = ("op", "inputs", "output", "backward_fn")

    def __init__(self, op: str, inputs: Sequence[Tensor], output: Tensor, backward_fn: BackwardFn):
        self.op = op
        self.inputs = tuple(inputs)
        self.output = output
        self.backward_fn = backward_fn


class Graph:
    """
    Tape of ops in execution order.

    Use as a context manager; ops executed inside the block are recorded when
    any of their inputs requires a gradient. The active graph is held in a
    context variable, so graphs on different threads never see each other.
    """

    def __init__(self):
        self.nodes: List[Node] = []
        self._tokens: list = []

    def __enter__(self) -> "Graph":
        self._tokens.append(_active_graph.set(self))
        return self

    def __exit__(self, exc_type, exc, tb):
        _active_graph.reset(self._tokens.pop())
        return False

    def __len__(self):
        return len(self.nodes)

    def record(self, op: str, inputs: Sequence[Tensor], output: Tensor, backward_fn: BackwardFn):
        output.requires_grad = True
        output.grad = np.zeros_like(output.data)
        output._graph = self
        self.nodes.append(Node(op, inputs, output, backward_fn))


def current_graph() -> Optional[Graph]:
    """Graph recording in the current context, if any."""
    return _active_graph.get()


def emit(op: str, inputs: Sequence[Tensor], result: np.ndarray, backward_fn: BackwardFn) -> Tensor:
    """Wrap an op result and record it on the active graph when gradients are needed."""
    out = Tensor._from_op(result)
    graph = current_graph()
    if graph is not None and any(t.requires_grad for t in inputs):
        graph.record(op, inputs, out, backward_fn)
    return out


def backward(loss: Tensor) -> None:
    """
    Populate gradients of every requires_grad leaf by reverse traversal.

    Intermediate buffers are reset on each call, so calling backward twice on
    the same loss accumulates exactly twice the gradient into the leaves.

    Args:
        loss: 1x1 tensor produced through recorded ops

    Raises:
        ShapeError: If loss is not a scalar
        GraphError: If loss was not produced on a graph
    """
    if loss.shape != (1, 1):
        raise ShapeError(f"backward needs a scalar (1x1) loss, got {loss.shape}")
    graph = loss._graph
    if graph is None:
        raise GraphError("loss was not recorded on a Graph; build it inside `with Graph():`")

    for node in graph.nodes:
        node.output.grad.fill(0.0)
    loss.grad[0, 0] = 1.0

    for node in reversed(graph.nodes):
        upstream = node.output.grad
        if not upstream.any():
            continue
        for tensor, grad in zip(node.inputs, node.backward_fn(upstream)):
            if grad is not None and tensor.requires_grad:
                tensor.grad += grad
