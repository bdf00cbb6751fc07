"""Log-densities and samplers over Tensors: diagonal Gaussian, Bernoulli and discretized logistic."""
import math
from dataclasses import dataclass

import numpy as np

from vampvae.autodiff import Tensor, as_tensor, ops
from vampvae.errors import DimensionError, DomainError

LOG_VAR_MIN = -14.0
LOG_VAR_MAX = 14.0
LOG_2PI = math.log(2.0 * math.pi)

LOGISTIC_BIN = 1.0 / 256.0
LOGISTIC_GRID = 255.0
LOGISTIC_FLOOR = 1e-7


@dataclass
class DiagGaussian:
    """
    N(mean, diag(exp(log_var))) over the last axis.

    log_var is clamped to [LOG_VAR_MIN, LOG_VAR_MAX] at construction.
    """
    mean: Tensor
    log_var: Tensor

    def __post_init__(self):
        self.mean = as_tensor(self.mean)
        log_var = as_tensor(self.log_var)
        if self.mean.shape != log_var.shape:
            raise DimensionError(f"mean {self.mean.shape} and log_var {log_var.shape} differ")
        self.log_var = log_var.clamp(LOG_VAR_MIN, LOG_VAR_MAX)

    @property
    def dim(self) -> int:
        return self.mean.shape[-1]

    def std(self) -> Tensor:
        return (self.log_var * 0.5).exp()


def _check_last_axis(name: str, value_shape: tuple, dim: int) -> None:
    if len(value_shape) == 0 or value_shape[-1] != dim:
        raise DimensionError(f"{name}: last axis of {value_shape} does not match dimension {dim}")


def log_normal_diag(z, p: DiagGaussian) -> Tensor:
    """Sum over the last axis of -1/2 ln 2pi - 1/2 log_var - (z - mean)^2 / (2 exp(log_var))."""
    z = as_tensor(z)
    _check_last_axis("log_normal_diag", z.shape, p.dim)
    centered = z - p.mean
    terms = (centered.square() * (-p.log_var).exp() + p.log_var + LOG_2PI) * -0.5
    return terms.sum(axis=-1)


def sample_reparam(p: DiagGaussian, eps: np.ndarray) -> Tensor:
    """mean + exp(1/2 log_var) * eps, differentiable in mean and log_var."""
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != p.mean.shape:
        raise DimensionError(f"sample_reparam: noise {eps.shape} does not match {p.mean.shape}")
    return p.mean + p.std() * eps


def kl_diag_gaussians(q: DiagGaussian, p: DiagGaussian) -> np.ndarray:
    """Analytic KL(q || p) per row."""
    q_mean, q_lv = q.mean.data, q.log_var.data
    p_mean, p_lv = p.mean.data, p.log_var.data
    terms = p_lv - q_lv + (np.exp(q_lv) + (q_mean - p_mean) ** 2) / np.exp(p_lv) - 1.0
    return 0.5 * np.sum(terms, axis=-1)


def entropy_diag_gaussian(q: DiagGaussian) -> np.ndarray:
    """1/2 sum(1 + ln 2pi + log_var) per row."""
    return 0.5 * np.sum(1.0 + LOG_2PI + q.log_var.data, axis=-1)


def log_bernoulli(x, logits: Tensor) -> Tensor:
    """
    Sum over pixels of x log sigma(l) + (1 - x) log(1 - sigma(l)), fused as x*l - softplus(l).

    Soft targets in [0, 1] are accepted.
    """
    x = np.asarray(x, dtype=np.float64)
    logits = as_tensor(logits)
    if x.shape != logits.shape:
        raise DimensionError(f"log_bernoulli: data {x.shape} and logits {logits.shape} differ")
    if np.any((x < 0.0) | (x > 1.0)):
        raise DomainError("log_bernoulli: targets must lie in [0, 1]")
    return (logits * x - logits.softplus()).sum(axis=-1)


def check_logistic_grid(x: np.ndarray, tolerance: float = 1e-9) -> None:
    scaled = x * LOGISTIC_GRID
    if np.any((x < -tolerance) | (x > 1.0 + tolerance)) or np.any(np.abs(scaled - np.round(scaled)) > tolerance * LOGISTIC_GRID):
        raise DomainError("log_discretized_logistic: data must lie on the grid {0, 1/255, ..., 1}")


def log_discretized_logistic(x, mean: Tensor, log_scale: Tensor) -> Tensor:
    """
    Sum over pixels of log[sigmoid((x + 1/256 - mean)/s) - sigmoid((x - mean)/s)].

    The bin probability is floored at 1e-7 before the log; edge bins are not
    widened to the tails.
    """
    x = np.asarray(x, dtype=np.float64)
    mean, log_scale = as_tensor(mean), as_tensor(log_scale)
    if x.shape != mean.shape or mean.shape != log_scale.shape:
        raise DimensionError(
            f"log_discretized_logistic: shapes {x.shape}, {mean.shape}, {log_scale.shape} differ"
        )
    check_logistic_grid(x)
    inv_scale = (-log_scale).exp()
    centered = -mean + x
    upper = ((centered + LOGISTIC_BIN) * inv_scale).sigmoid()
    lower = (centered * inv_scale).sigmoid()
    mass = (upper - lower).clamp(low=LOGISTIC_FLOOR)
    return mass.log().sum(axis=-1)


@dataclass
class BernoulliParams:
    """Decoder output for binary pixels."""
    logits: Tensor

    def log_prob(self, x) -> Tensor:
        return log_bernoulli(x, self.logits)

    def mean(self) -> np.ndarray:
        return ops.stable_sigmoid(self.logits.data)


@dataclass
class LogisticParams:
    """Decoder output for 8-bit gray-scale pixels."""
    loc: Tensor
    log_scale: Tensor

    def log_prob(self, x) -> Tensor:
        return log_discretized_logistic(x, self.loc, self.log_scale)

    def mean(self) -> np.ndarray:
        return np.clip(self.loc.data, 0.0, 1.0)


LikelihoodParams = BernoulliParams | LogisticParams
