"""
Priors over the top latent layer.

A prior is evaluated as a log-density per batch row and can be sampled for
generation. Mixture priors (MoG and the VampPrior family) share one
log-sum-exp evaluation; VampPrior components are the encoder evaluated at the
pseudo-inputs, recomputed on every call so gradients reach both the
pseudo-inputs and the encoder weights.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from vampvae.autodiff import Tensor, as_tensor, no_grad
from vampvae.errors import ContractError, DimensionError, RangeError
from vampvae.models.priors import (MoGPriorSpec, PriorSpec, SGPriorSpec, VampDataPriorSpec,
                                   VampPriorSpec, WeightedVampPriorSpec)
from vampvae.networks.distributions import DiagGaussian, log_normal_diag, sample_reparam
from vampvae.networks.module import Module

logger = logging.getLogger(__name__)

Encoder = Callable[[Tensor], DiagGaussian]

PSEUDO_INPUT_STD = 0.01
PSEUDO_INPUT_CLIP = 1e-3
MOG_MEAN_STD = 0.5


@dataclass
class PriorSample:
    """Latent draws plus the mixture component used for each row (None for SG)."""
    z: np.ndarray
    components: np.ndarray | None


class Prior(Module):
    latent_dim: int

    def log_prob(self, z: Tensor) -> Tensor:
        raise NotImplementedError

    def sample(self, n: int, rng: np.random.Generator, component: int | None = None) -> PriorSample:
        raise NotImplementedError

    def check_latent(self, z: Tensor) -> None:
        if z.ndim != 2 or z.shape[1] != self.latent_dim:
            raise DimensionError(f"prior over {self.latent_dim} dims got latent batch of shape {z.shape}")


class StandardGaussianPrior(Prior):
    def __init__(self, latent_dim: int):
        self.latent_dim = latent_dim

    def log_prob(self, z: Tensor) -> Tensor:
        self.check_latent(z)
        zeros = np.zeros(self.latent_dim)
        return log_normal_diag(z, DiagGaussian(zeros, zeros))

    def sample(self, n: int, rng: np.random.Generator, component: int | None = None) -> PriorSample:
        if component is not None:
            raise ContractError("the standard Gaussian prior has no components")
        return PriorSample(rng.standard_normal((n, self.latent_dim)), None)


def mixture_log_prob(z: Tensor, components: DiagGaussian, log_weights: Tensor) -> Tensor:
    """log sum_k exp(log w_k + log N(z | mu_k, sigma_k^2)) for every row of z."""
    n, dim = z.shape
    k = components.mean.shape[0]
    pairwise = z.reshape(n, 1, dim).expand(n, k, dim)
    return (log_normal_diag(pairwise, components) + log_weights).log_sum_exp(axis=1)


class MixturePrior(Prior):
    """Shared sampling and evaluation for priors that are K-component Gaussian mixtures."""

    @property
    def n_components(self) -> int:
        raise NotImplementedError

    def components(self) -> DiagGaussian:
        raise NotImplementedError

    def log_weights(self) -> Tensor:
        return Tensor(np.full(self.n_components, -np.log(float(self.n_components))))

    def weights(self) -> np.ndarray:
        with no_grad():
            return np.exp(self.log_weights().data)

    def log_prob(self, z: Tensor) -> Tensor:
        self.check_latent(z)
        return mixture_log_prob(z, self.components(), self.log_weights())

    def sample(self, n: int, rng: np.random.Generator, component: int | None = None) -> PriorSample:
        k = self.n_components
        if component is not None:
            if not 0 <= component < k:
                raise RangeError(f"component {component} out of range for K={k}")
            chosen = np.full(n, component, dtype=np.int64)
        else:
            chosen = rng.choice(k, size=n, p=self.weights())
        with no_grad():
            comps = self.components()
            picked = DiagGaussian(comps.mean.data[chosen], comps.log_var.data[chosen])
            eps = rng.standard_normal((n, self.latent_dim))
            z = sample_reparam(picked, eps).data
        return PriorSample(z, chosen)


class MixtureOfGaussiansPrior(MixturePrior):
    """Uniform mixture of K trainable diagonal Gaussians."""

    def __init__(self, latent_dim: int, k: int, rng: np.random.Generator):
        self.latent_dim = latent_dim
        self.means = Tensor(rng.normal(0.0, MOG_MEAN_STD, size=(k, latent_dim)), requires_grad=True)
        self.log_vars = Tensor(np.zeros((k, latent_dim)), requires_grad=True)

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    def components(self) -> DiagGaussian:
        return DiagGaussian(self.means, self.log_vars)


class VampPrior(MixturePrior):
    """
    Mixture of the encoder's posteriors at K pseudo-inputs.

    Covers the trainable VampPrior, the frozen data variant (trainable=False)
    and the weighted variant (weighted=True, weights softmax(weight_logits)).
    The encoder is held by reference and never mutated here.
    """

    def __init__(self, encoder: Encoder, latent_dim: int, pseudo_inputs: np.ndarray, *,
                 trainable: bool = True, squash: bool = True, weighted: bool = False):
        pseudo_inputs = np.asarray(pseudo_inputs, dtype=np.float64)
        if pseudo_inputs.ndim != 2 or pseudo_inputs.shape[0] < 1:
            raise ContractError(f"pseudo-inputs must be a non-empty K x D matrix, got {pseudo_inputs.shape}")
        self._encoder = encoder
        self.latent_dim = latent_dim
        self.squash = squash
        self.pseudo_inputs = Tensor(pseudo_inputs, requires_grad=trainable)
        if weighted:
            self.weight_logits = Tensor(np.zeros(pseudo_inputs.shape[0]), requires_grad=True)

    @property
    def weighted(self) -> bool:
        return hasattr(self, "weight_logits")

    @property
    def n_components(self) -> int:
        return self.pseudo_inputs.shape[0]

    def inputs(self) -> Tensor:
        """Pseudo-inputs in data space."""
        return self.pseudo_inputs.sigmoid() if self.squash else self.pseudo_inputs

    def components(self) -> DiagGaussian:
        return self._encoder(self.inputs())

    def log_weights(self) -> Tensor:
        if not self.weighted:
            return super().log_weights()
        return self.weight_logits - self.weight_logits.log_sum_exp(axis=0)


def init_pseudo_inputs(k: int, data_dim: int, rng: np.random.Generator,
                       train: np.ndarray | None, squash: bool) -> np.ndarray:
    """Draws around the per-pixel data mean, mapped through the inverse logistic when squashed."""
    center = train.mean(axis=0) if train is not None and len(train) else np.full(data_dim, 0.5)
    draws = rng.normal(center, PSEUDO_INPUT_STD, size=(k, data_dim))
    if not squash:
        return draws
    draws = np.clip(draws, PSEUDO_INPUT_CLIP, 1.0 - PSEUDO_INPUT_CLIP)
    return np.log(draws) - np.log1p(-draws)


def build_prior(spec: PriorSpec, *, latent_dim: int, data_dim: int, encoder: Encoder,
                rng: np.random.Generator, train: np.ndarray | None = None) -> Prior:
    """Instantiate the prior described by `spec`; `train` seeds pseudo-inputs when available."""
    if isinstance(spec, SGPriorSpec):
        return StandardGaussianPrior(latent_dim)
    if isinstance(spec, MoGPriorSpec):
        return MixtureOfGaussiansPrior(latent_dim, spec.K, rng)
    if isinstance(spec, VampDataPriorSpec):
        if train is None:
            # placeholder rows, replaced when a checkpoint is loaded
            pseudo = np.full((spec.K, data_dim), 0.5)
        else:
            if len(train) < spec.K:
                raise ContractError(f"VampPrior-data needs at least K={spec.K} training rows, got {len(train)}")
            pseudo = train[rng.choice(len(train), size=spec.K, replace=False)]
        return VampPrior(encoder, latent_dim, pseudo, trainable=False, squash=False)
    if isinstance(spec, (VampPriorSpec, WeightedVampPriorSpec)):
        pseudo = init_pseudo_inputs(spec.K, data_dim, rng, train, spec.squash)
        return VampPrior(encoder, latent_dim, pseudo, trainable=True, squash=spec.squash,
                         weighted=isinstance(spec, WeightedVampPriorSpec))
    raise ContractError(f"unknown prior specification {spec!r}")


def log_prior(z, prior: Prior) -> Tensor:
    """Prior log-density of every row of z."""
    return prior.log_prob(as_tensor(z))


def sample_prior(prior: Prior, n: int, rng: np.random.Generator, component: int | None = None) -> PriorSample:
    if n < 0:
        raise ContractError(f"sample count must be non-negative, got {n}")
    return prior.sample(n, rng, component)


class PosteriorModel(Protocol):
    def prior_posterior(self, x: Tensor) -> DiagGaussian: ...


def cross_entropy_samples(data: np.ndarray, model: PosteriorModel, prior: Prior,
                          samples_per_x: int, rng: np.random.Generator) -> np.ndarray:
    """
    -log p(z) for z ~ q(z|x), samples_per_x draws per row of `data`.

    Rows are laid out sample-major (the data tiled samples_per_x times) and the
    noise is the first draw from `rng`, matching a model forward pass with the
    same generator.
    """
    data = np.asarray(data, dtype=np.float64)
    if samples_per_x < 1:
        raise ContractError(f"samples_per_x must be >= 1, got {samples_per_x}")
    if data.ndim != 2 or len(data) == 0:
        raise ContractError("cross-entropy needs a non-empty batch of data rows")
    with no_grad():
        q = model.prior_posterior(Tensor(np.tile(data, (samples_per_x, 1))))
        z = sample_reparam(q, rng.standard_normal(q.mean.shape))
        return -log_prior(z, prior).data


def cross_entropy_to_prior(data: np.ndarray, model: PosteriorModel, prior: Prior,
                           samples_per_x: int, rng: np.random.Generator) -> float:
    """Monte Carlo estimate of E_{z ~ q(z)}[-log p(z)] under the aggregated posterior of `data`."""
    return float(cross_entropy_samples(data, model, prior, samples_per_x, rng).mean())
