"""
One-level VAE and the interface shared by every latent-variable model.

`forward_samples` evaluates all log-terms for L reparameterized draws per row
and returns them shaped (L, N); `forward` averages them over L. Noise for the
latent draws is taken from the caller's generator, top latent level first.
"""
import logging
from dataclasses import dataclass, fields

import numpy as np

from vampvae.autodiff import Tensor, as_tensor, no_grad
from vampvae.errors import ContractError, DimensionError
from vampvae.models.model_spec import ModelSpec
from vampvae.networks.distributions import DiagGaussian, LikelihoodParams, log_normal_diag, sample_reparam
from vampvae.networks.layers import GatedStack, GaussianMLP, LikelihoodHead
from vampvae.networks.module import Module
from vampvae.networks.priors import Prior, sample_prior

logger = logging.getLogger(__name__)


@dataclass
class VAERecord:
    log_px: Tensor
    log_pz: Tensor
    log_qz: Tensor
    z: Tensor

    @property
    def kl_part(self) -> Tensor:
        """log p(z) - log q(z|x): the term scaled by the warm-up coefficient."""
        return self.log_pz - self.log_qz

    @property
    def elbo(self) -> Tensor:
        return self.log_px + self.kl_part

    def weighted_elbo(self, beta: float) -> Tensor:
        return self.log_px + self.kl_part * beta


@dataclass
class Generation:
    """Decoded likelihood means plus the latent draws that produced them."""
    images: np.ndarray
    latents: dict[str, np.ndarray]
    components: np.ndarray | None = None


def _average_over_samples(record):
    # (L, N) -> (N,) for the log-terms; latent draws keep their (L*N, M) layout
    values = {}
    for f in fields(record):
        value = getattr(record, f.name)
        values[f.name] = value.mean(axis=0) if f.name.startswith("log_") else value
    return type(record)(**values)


class LatentModel(Module):
    """Common surface of the VAE, the HVAE and the linear-Gaussian reference model."""
    data_dim: int
    prior: Prior

    def check_batch(self, x) -> np.ndarray:
        x = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.data_dim:
            raise DimensionError(f"expected a batch of rows of length {self.data_dim}, got shape {x.shape}")
        return x

    @staticmethod
    def check_samples(mc_samples: int) -> None:
        if mc_samples < 1:
            raise ContractError(f"mc_samples must be >= 1, got {mc_samples}")

    def forward_samples(self, x, rng: np.random.Generator, mc_samples: int = 1):
        raise NotImplementedError

    def forward(self, x, rng: np.random.Generator, mc_samples: int = 1):
        """Per-row record averaged over `mc_samples` Monte Carlo draws."""
        return _average_over_samples(self.forward_samples(x, rng, mc_samples))

    def prior_posterior(self, x: Tensor) -> DiagGaussian:
        """Variational posterior over the latent level that carries the prior."""
        raise NotImplementedError

    def encode_means(self, x) -> dict[str, np.ndarray]:
        raise NotImplementedError


class VAE(LatentModel):
    """
    q(z|x) = N(mu(x), diag(sigma^2(x))), p(x|z) Bernoulli or discretized logistic,
    and any prior over z.
    """

    def __init__(self, spec: ModelSpec, rng: np.random.Generator):
        if spec.levels != 1:
            raise ContractError(f"VAE needs a one-level spec, got levels={spec.levels}")
        self.spec = spec
        self.data_dim = spec.data_dim
        self.encoder = GaussianMLP(spec.data_dim, spec.hidden, spec.hidden_layers, spec.latent_1, rng)
        self.decoder_body = GatedStack(spec.latent_1, spec.hidden, spec.hidden_layers, rng)
        self.decoder_head = LikelihoodHead(spec.hidden, spec.data_dim, spec.likelihood, rng)

    def attach_prior(self, prior: Prior) -> None:
        self.prior = prior

    def decode(self, z: Tensor) -> LikelihoodParams:
        return self.decoder_head(self.decoder_body(z))

    def prior_posterior(self, x: Tensor) -> DiagGaussian:
        return self.encoder(as_tensor(x))

    def forward_samples(self, x, rng: np.random.Generator, mc_samples: int = 1) -> VAERecord:
        x = self.check_batch(x)
        self.check_samples(mc_samples)
        n = x.shape[0]
        rows = np.tile(x, (mc_samples, 1))
        q = self.encoder(Tensor(rows))
        z = sample_reparam(q, rng.standard_normal(q.mean.shape))
        return VAERecord(
            log_px=self.decode(z).log_prob(rows).reshape(mc_samples, n),
            log_pz=self.prior.log_prob(z).reshape(mc_samples, n),
            log_qz=log_normal_diag(z, q).reshape(mc_samples, n),
            z=z,
        )

    def encode_means(self, x) -> dict[str, np.ndarray]:
        x = self.check_batch(x)
        with no_grad():
            return {"z": self.encoder(Tensor(x)).mean.numpy()}

    def reconstruct(self, x, rng: np.random.Generator) -> np.ndarray:
        x = self.check_batch(x)
        with no_grad():
            q = self.encoder(Tensor(x))
            z = sample_reparam(q, rng.standard_normal(q.mean.shape))
            return self.decode(z).mean()

    def decode_top(self, z: np.ndarray) -> np.ndarray:
        """Likelihood means for given latent codes."""
        with no_grad():
            return self.decode(Tensor(z)).mean()

    def generate(self, n: int, rng: np.random.Generator, component: int | None = None) -> Generation:
        draw = sample_prior(self.prior, n, rng, component)
        if n == 0:
            return Generation(np.zeros((0, self.data_dim)), {"z": draw.z}, draw.components)
        with no_grad():
            means = self.decode(Tensor(draw.z)).mean()
        return Generation(means, {"z": draw.z}, draw.components)


def vae_forward(x, model: VAE, rng: np.random.Generator, mc_samples: int = 1) -> VAERecord:
    return model.forward(x, rng, mc_samples)
