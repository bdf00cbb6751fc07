import numpy as np
import pytest

from vampvae.autodiff import Tensor, concat, forward_op, grad_check, ops, register_op
from vampvae.errors import ContractError


@register_op("square_without_factor_two")
def _broken_square(a):
    # deliberately wrong: d(a^2)/da is 2a
    return a * a, lambda g: (g * a,)


def _params(rng, *shapes):
    return [Tensor(rng.normal(size=shape), requires_grad=True) for shape in shapes]


def test_quadratic_form_is_exact(rng):
    a = rng.normal(size=(4, 4))
    (x,) = _params(rng, (4,))
    error = grad_check(lambda: (x @ Tensor(a.T) * x).sum(), [x])
    assert error < 1e-9


@pytest.mark.parametrize("op", ["exp", "tanh", "sigmoid", "softplus", "square", "neg"])
def test_elementwise_ops(op, rng):
    (x,) = _params(rng, (3, 2))
    weights = Tensor(rng.normal(size=(3, 2)))
    assert grad_check(lambda: (getattr(ops, op)(x) * weights).sum(), [x]) < 1e-7


def test_log_and_div(rng):
    x = Tensor(rng.uniform(0.5, 2.0, size=(2, 3)), requires_grad=True)
    y = Tensor(rng.uniform(0.5, 2.0, size=(3,)), requires_grad=True)
    assert grad_check(lambda: (x.log() / y).sum(), [x, y]) < 1e-7


def test_matmul_and_broadcast_add(rng):
    x, w, b = _params(rng, (4, 3), (3, 2), (2,))
    assert grad_check(lambda: ((x @ w + b) * (x @ w + b)).mean(), [x, w, b]) < 1e-7


@pytest.mark.parametrize("axis", [0, 1, -1])
def test_log_sum_exp_over_axes(axis, rng):
    (x,) = _params(rng, (3, 4))
    weights = Tensor(rng.normal(size=(4,) if axis == 0 else (3,)))
    assert grad_check(lambda: (x.log_sum_exp(axis=axis) * weights).sum(), [x]) < 1e-7


def test_shape_ops(rng):
    a, b = _params(rng, (2, 3), (2, 2))
    weights = Tensor(rng.normal(size=(2, 4, 5)))

    def f():
        joined = concat([a, b], axis=-1)[:, 1:]
        return (joined.reshape(2, 1, 4).expand(2, 4, 4).sum(axis=1) * weights[:, 0, :4]).sum()

    assert grad_check(f, [a, b]) < 1e-7


def test_gated_composition(rng):
    x, w1, w2, w3 = _params(rng, (5, 4), (4, 3), (4, 3), (3, 1))

    def f():
        h = (x @ w1) * (x @ w2).sigmoid()
        return (h.tanh() @ w3).softplus().mean()

    assert grad_check(f, [x, w1, w2, w3]) < 1e-5


def test_wrong_backward_rule_is_caught(rng):
    (x,) = _params(rng, (4,))
    error = grad_check(lambda: forward_op("square_without_factor_two", (x,)).sum(), [x])
    assert error > 1e-2


def test_non_deterministic_function_is_rejected(rng):
    (x,) = _params(rng, (2,))
    noise = np.random.default_rng(0)
    with pytest.raises(ContractError):
        grad_check(lambda: (x * noise.normal()).sum(), [x])


@pytest.mark.parametrize("h", [1e-8, 1e-2])
def test_step_outside_range(h, rng):
    (x,) = _params(rng, (2,))
    with pytest.raises(ContractError):
        grad_check(lambda: (x * x).sum(), [x], h=h)
