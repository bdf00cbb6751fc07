import logging
from typing import Callable, Sequence

import numpy as np

from vampvae.autodiff.tensor import Tensor, no_grad
from vampvae.errors import ContractError

logger = logging.getLogger(__name__)


def grad_check(f: Callable[[], Tensor], params: Sequence[Tensor], h: float = 1e-5) -> float:
    """
    Compare reverse-mode gradients of the scalar `f()` with central differences.

    `f` must be deterministic: any noise it uses has to come from a generator
    it seeds itself. Returns the largest
    |analytic - numeric| / max(1, |analytic|, |numeric|) over all coordinates.
    """
    if not 1e-7 <= h <= 1e-3:
        raise ContractError(f"step h must lie in [1e-7, 1e-3], got {h}")

    for param in params:
        param.zero_grad()
    first = f()
    with no_grad():
        second = f().item()
    if first.item() != second:
        raise ContractError("f is not deterministic: repeated evaluation differs")
    first.backward()
    analytic = [p.grad.copy() if p.grad is not None else np.zeros_like(p.data) for p in params]

    worst = 0.0
    with no_grad():
        for param, grad in zip(params, analytic):
            flat = param.data.reshape(-1)
            flat_grad = grad.reshape(-1)
            for i in range(flat.size):
                original = flat[i]
                flat[i] = original + h
                upper = f().item()
                flat[i] = original - h
                lower = f().item()
                flat[i] = original
                numeric = (upper - lower) / (2.0 * h)
                error = abs(flat_grad[i] - numeric) / max(1.0, abs(flat_grad[i]), abs(numeric))
                worst = max(worst, error)
    logger.debug("grad_check over %d tensors: max relative error %.3e", len(params), worst)
    return worst
