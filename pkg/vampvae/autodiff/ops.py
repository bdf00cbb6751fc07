"""
Operation registry of the autodiff core.

Every kernel maps input arrays to `(output, backward_fn)`; `forward_op` wraps
the result into a Tensor, rejects non-finite output and records a graph node
when any input requires grad. Binary operations support only equal shapes,
scalar operands and leading-batch broadcasting (the shorter shape must be a
suffix of the longer one).
"""
import builtins
from typing import Callable, Sequence

import numpy as np

from vampvae.autodiff.tensor import Node, Tensor, as_tensor, is_grad_enabled
from vampvae.errors import ContractError, DimensionError, NumericError

Kernel = Callable[..., tuple[np.ndarray, Callable]]

OPS: dict[str, Kernel] = {}


def register_op(tag: str):
    def decorator(kernel: Kernel) -> Kernel:
        OPS[tag] = kernel
        return kernel
    return decorator


def forward_op(tag: str, inputs: Sequence, **params) -> Tensor:
    """Run the registered kernel `tag` on `inputs` and record it for backward."""
    kernel = OPS.get(tag)
    if kernel is None:
        raise ContractError(f"unknown operation {tag!r}")
    tensors = tuple(as_tensor(value) for value in inputs)
    with np.errstate(all="ignore"):
        data, backward_fn = kernel(*(t.data for t in tensors), **params)
    data = np.asarray(data, dtype=np.float64)
    if not np.all(np.isfinite(data)):
        raise NumericError(f"operation {tag!r} produced non-finite values")
    out = Tensor._from_op(data)
    if is_grad_enabled() and builtins.any(t.requires_grad for t in tensors):
        out.requires_grad = True
        out._node = Node(tag, tensors, backward_fn)
    return out


# Broadcasting

def _is_scalar(shape: tuple[int, ...]) -> bool:
    return len(shape) == 0 or shape == (1,)


def broadcast_shape(tag: str, a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    if a == b:
        return a
    if _is_scalar(b):
        return a
    if _is_scalar(a):
        return b
    if len(a) > len(b) and a[len(a) - len(b):] == b:
        return a
    if len(b) > len(a) and b[len(b) - len(a):] == a:
        return b
    raise DimensionError(f"{tag}: shapes {a} and {b} do not broadcast")


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` back down to `shape` (inverse of leading-batch/scalar broadcasting)."""
    if grad.shape == shape:
        return grad
    if int(np.prod(shape)) == 1:
        return np.asarray(grad.sum()).reshape(shape)
    lead = grad.ndim - len(shape)
    return grad.sum(axis=tuple(range(lead)))


def _binary(tag: str, a: np.ndarray, b: np.ndarray) -> None:
    broadcast_shape(tag, a.shape, b.shape)


@register_op("add")
def _add(a, b):
    _binary("add", a, b)

    def backward(g):
        return unbroadcast(g, a.shape), unbroadcast(g, b.shape)
    return a + b, backward


@register_op("sub")
def _sub(a, b):
    _binary("sub", a, b)

    def backward(g):
        return unbroadcast(g, a.shape), unbroadcast(-g, b.shape)
    return a - b, backward


@register_op("mul")
def _mul(a, b):
    _binary("mul", a, b)

    def backward(g):
        return unbroadcast(g * b, a.shape), unbroadcast(g * a, b.shape)
    return a * b, backward


@register_op("div")
def _div(a, b):
    _binary("div", a, b)
    out = a / b

    def backward(g):
        return unbroadcast(g / b, a.shape), unbroadcast(-g * out / b, b.shape)
    return out, backward


@register_op("matmul")
def _matmul(a, b):
    if b.ndim != 2 or a.ndim < 1 or a.shape[-1] != b.shape[0]:
        raise DimensionError(f"matmul: shapes {a.shape} and {b.shape} do not conform")

    def backward(g):
        grad_a = g @ b.T
        grad_b = a.reshape(-1, a.shape[-1]).T @ g.reshape(-1, b.shape[1])
        return grad_a, grad_b
    return a @ b, backward


# Elementwise

@register_op("neg")
def _neg(a):
    return -a, lambda g: (-g,)


@register_op("exp")
def _exp(a):
    out = np.exp(a)
    return out, lambda g: (g * out,)


@register_op("log")
def _log(a):
    return np.log(a), lambda g: (g / a,)


def stable_sigmoid(a: np.ndarray) -> np.ndarray:
    out = np.empty_like(a)
    positive = a >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-a[positive]))
    e = np.exp(a[~positive])
    out[~positive] = e / (1.0 + e)
    return out


@register_op("sigmoid")
def _sigmoid(a):
    out = stable_sigmoid(a)
    return out, lambda g: (g * out * (1.0 - out),)


@register_op("tanh")
def _tanh(a):
    out = np.tanh(a)
    return out, lambda g: (g * (1.0 - out * out),)


@register_op("softplus")
def _softplus(a):
    # max(x, 0) + log1p(exp(-|x|)) never overflows
    out = np.maximum(a, 0.0) + np.log1p(np.exp(-np.abs(a)))
    return out, lambda g: (g * stable_sigmoid(a),)


@register_op("square")
def _square(a):
    return a * a, lambda g: (2.0 * a * g,)


@register_op("clamp")
def _clamp(a, low=-np.inf, high=np.inf):
    inside = (a >= low) & (a <= high)
    return np.clip(a, low, high), lambda g: (g * inside,)


# Reductions

def _kept_shape(shape: tuple[int, ...], axis: int | None) -> tuple[int, ...]:
    if axis is None:
        return (1,) * len(shape)
    kept = list(shape)
    kept[axis] = 1
    return tuple(kept)


def _restore_axis(g: np.ndarray, shape: tuple[int, ...], axis: int | None) -> np.ndarray:
    return np.broadcast_to(np.reshape(g, _kept_shape(shape, axis)), shape)


def _check_axis(tag: str, a: np.ndarray, axis: int | None) -> None:
    if axis is not None and not -a.ndim <= axis < a.ndim:
        raise DimensionError(f"{tag}: axis {axis} out of range for shape {a.shape}")


@register_op("sum")
def _sum(a, axis=None, keepdims=False):
    _check_axis("sum", a, axis)

    def backward(g):
        return (np.array(_restore_axis(g, a.shape, axis)),)
    return np.sum(a, axis=axis, keepdims=keepdims), backward


@register_op("mean")
def _mean(a, axis=None, keepdims=False):
    _check_axis("mean", a, axis)
    count = a.size if axis is None else a.shape[axis]

    def backward(g):
        return (np.array(_restore_axis(g, a.shape, axis)) / count,)
    return np.mean(a, axis=axis, keepdims=keepdims), backward


def log_sum_exp_array(a: np.ndarray, axis: int = -1, keepdims: bool = False) -> np.ndarray:
    """max(v) + log(sum(exp(v - max(v)))) along `axis`."""
    peak = np.max(a, axis=axis, keepdims=True)
    out = peak + np.log(np.sum(np.exp(a - peak), axis=axis, keepdims=True))
    return out if keepdims else np.squeeze(out, axis=axis)


@register_op("log_sum_exp")
def _log_sum_exp(a, axis=-1, keepdims=False):
    _check_axis("log_sum_exp", a, axis)
    if a.shape[axis] == 0:
        raise DimensionError("log_sum_exp over an empty axis")
    out = log_sum_exp_array(a, axis=axis, keepdims=True)
    weights = np.exp(a - out)

    def backward(g):
        return (np.reshape(g, out.shape) * weights,)
    return (out if keepdims else np.squeeze(out, axis=axis)), backward


# Shape

@register_op("reshape")
def _reshape(a, shape=()):
    try:
        out = a.reshape(shape)
    except ValueError:
        raise DimensionError(f"reshape: cannot view {a.shape} as {shape}")
    return out, lambda g: (g.reshape(a.shape),)


@register_op("expand")
def _expand(a, shape=()):
    shape = tuple(shape)
    try:
        out = np.broadcast_to(a, shape)
    except ValueError:
        raise DimensionError(f"expand: cannot expand {a.shape} to {shape}")

    def backward(g):
        lead = g.ndim - a.ndim
        g = g.sum(axis=tuple(range(lead))) if lead else g
        axes = tuple(i for i, n in enumerate(a.shape) if n == 1 and g.shape[i] != 1)
        if axes:
            g = g.sum(axis=axes, keepdims=True)
        return (g,)
    return np.array(out), backward


@register_op("index")
def _index(a, key=None):
    try:
        out = a[key]
    except IndexError as exc:
        raise DimensionError(f"index: {exc}")

    def backward(g):
        grad = np.zeros_like(a)
        np.add.at(grad, key, g)
        return (grad,)
    return np.array(out), backward


@register_op("concat")
def _concat(*arrays, axis=-1):
    try:
        out = np.concatenate(arrays, axis=axis)
    except ValueError as exc:
        raise DimensionError(f"concat: {exc}")
    sizes = [arr.shape[axis] for arr in arrays]
    bounds = np.cumsum([0] + sizes)

    def backward(g):
        return tuple(
            np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=axis) for i in range(len(arrays))
        )
    return out, backward


# Public functional API

def add(a, b): return forward_op("add", (a, b))
def sub(a, b): return forward_op("sub", (a, b))
def mul(a, b): return forward_op("mul", (a, b))
def div(a, b): return forward_op("div", (a, b))
def matmul(a, b): return forward_op("matmul", (a, b))
def neg(a): return forward_op("neg", (a,))
def exp(a): return forward_op("exp", (a,))
def log(a): return forward_op("log", (a,))
def sigmoid(a): return forward_op("sigmoid", (a,))
def tanh(a): return forward_op("tanh", (a,))
def softplus(a): return forward_op("softplus", (a,))
def square(a): return forward_op("square", (a,))


def clamp(a, low=-np.inf, high=np.inf):
    return forward_op("clamp", (a,), low=low, high=high)


def sum(a, axis=None, keepdims=False):  # noqa: A001
    return forward_op("sum", (a,), axis=axis, keepdims=keepdims)


def mean(a, axis=None, keepdims=False):
    return forward_op("mean", (a,), axis=axis, keepdims=keepdims)


def log_sum_exp(a, axis=-1, keepdims=False):
    return forward_op("log_sum_exp", (a,), axis=axis, keepdims=keepdims)


def reshape(a, shape):
    return forward_op("reshape", (a,), shape=tuple(shape))


def expand(a, shape):
    return forward_op("expand", (a,), shape=tuple(shape))


def index(a, key):
    return forward_op("index", (a,), key=key)


def concat(tensors: Sequence, axis: int = -1):
    if not tensors:
        raise DimensionError("concat needs at least one tensor")
    return forward_op("concat", tuple(tensors), axis=axis)
