import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from vampvae.errors import ContractError, DimensionError, NumericError

# Graph recording is switched per thread so that concurrent evaluations
# over shared parameters never see each other's state.
_grad_state = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_grad_state, "enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording for the current thread."""
    previous = is_grad_enabled()
    _grad_state.enabled = False
    try:
        yield
    finally:
        _grad_state.enabled = previous


BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]


@dataclass(eq=False)
class Node:
    """One recorded operation: its tag, its inputs and the rule mapping the output gradient to input gradients."""
    tag: str
    inputs: tuple["Tensor", ...]
    backward_fn: BackwardFn


class Tensor:
    """
    Dense n-dimensional array of 64-bit reals with an optional gradient slot.

    Leaves created with requires_grad=True accumulate `grad` during backward.
    Non-leaf tensors carry the `Node` that produced them until the graph is
    released by `backward`.
    """

    # numpy defers binary operators to Tensor
    __array_ufunc__ = None

    def __init__(self, data, requires_grad: bool = False):
        array = np.array(data, dtype=np.float64, order="C")
        if not np.all(np.isfinite(array)):
            raise NumericError("tensor data must be finite")
        self.data: np.ndarray = array
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._node: Node | None = None

    @classmethod
    def _from_op(cls, data: np.ndarray) -> "Tensor":
        # Values were already checked by forward_op
        out = cls.__new__(cls)
        out.data = np.asarray(data, dtype=np.float64, order="C")
        out.requires_grad = False
        out.grad = None
        out._node = None
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._node is None

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single element, tensor has shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def detach(self) -> "Tensor":
        return Tensor._from_op(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    # Arithmetic
    def __add__(self, other):
        return ops.add(self, other)

    def __radd__(self, other):
        return ops.add(other, self)

    def __sub__(self, other):
        return ops.sub(self, other)

    def __rsub__(self, other):
        return ops.sub(other, self)

    def __mul__(self, other):
        return ops.mul(self, other)

    def __rmul__(self, other):
        return ops.mul(other, self)

    def __truediv__(self, other):
        return ops.div(self, other)

    def __rtruediv__(self, other):
        return ops.div(other, self)

    def __neg__(self):
        return ops.neg(self)

    def __matmul__(self, other):
        return ops.matmul(self, other)

    def __getitem__(self, index):
        return ops.index(self, index)

    # Elementwise
    def exp(self):
        return ops.exp(self)

    def log(self):
        return ops.log(self)

    def sigmoid(self):
        return ops.sigmoid(self)

    def tanh(self):
        return ops.tanh(self)

    def softplus(self):
        return ops.softplus(self)

    def square(self):
        return ops.square(self)

    def clamp(self, low: float = -np.inf, high: float = np.inf):
        return ops.clamp(self, low=low, high=high)

    # Reductions and shape
    def sum(self, axis: int | None = None, keepdims: bool = False):
        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: int | None = None, keepdims: bool = False):
        return ops.mean(self, axis=axis, keepdims=keepdims)

    def log_sum_exp(self, axis: int = -1, keepdims: bool = False):
        return ops.log_sum_exp(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape=shape)

    def expand(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.expand(self, shape=shape)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


@dataclass
class Graph:
    """Tensors reachable from a root in topological order (inputs precede consumers)."""
    order: list[Tensor] = field(default_factory=list)

    @classmethod
    def trace(cls, root: Tensor) -> "Graph":
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(root, False)]
        while stack:
            tensor, expanded = stack.pop()
            if expanded:
                order.append(tensor)
                continue
            if id(tensor) in visited:
                continue
            visited.add(id(tensor))
            stack.append((tensor, True))
            if tensor._node is not None:
                for parent in tensor._node.inputs:
                    if parent.requires_grad and id(parent) not in visited:
                        stack.append((parent, False))
        return cls(order)

    def release(self) -> None:
        for tensor in self.order:
            tensor._node = None


def backward(root: Tensor) -> None:
    """
    Accumulate d(root)/d(leaf) into `grad` of every requires_grad leaf.

    Each node is visited exactly once in reverse topological order; gradients
    arriving over several paths are summed before the node propagates them.
    The graph is released afterwards (define-by-run).
    """
    if root.data.size != 1:
        raise ContractError(f"backward needs a scalar root, got shape {root.shape}")
    if not root.requires_grad:
        raise ContractError("backward called on a tensor that does not require grad")

    graph = Graph.trace(root)
    pending: dict[int, np.ndarray] = {id(root): np.ones_like(root.data)}
    for tensor in reversed(graph.order):
        grad = pending.pop(id(tensor), None)
        if grad is None:
            continue
        if grad.shape != tensor.data.shape:
            raise DimensionError(f"gradient of shape {grad.shape} for a tensor of shape {tensor.shape}")
        if tensor._node is None:
            tensor.grad = grad.copy() if tensor.grad is None else tensor.grad + grad
            continue
        input_grads = tensor._node.backward_fn(grad)
        for parent, parent_grad in zip(tensor._node.inputs, input_grads):
            if parent_grad is None or not parent.requires_grad:
                continue
            if id(parent) in pending:
                pending[id(parent)] = pending[id(parent)] + parent_grad
            else:
                pending[id(parent)] = parent_grad
    graph.release()


from vampvae.autodiff import ops  # noqa: E402  (ops needs Tensor defined first)
