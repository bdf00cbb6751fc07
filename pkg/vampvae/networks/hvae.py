"""
Two-level hierarchical VAE.

Variational part q(z1|x, z2) q(z2|x); generative part p(x|z1, z2) p(z1|z2) p(z2)
with the configurable prior on z2. Conditionals that see two inputs run each
through its own gated stack and join the concatenation with one gated layer.
"""
from dataclasses import dataclass

import numpy as np

from vampvae.autodiff import Tensor, as_tensor, concat, no_grad
from vampvae.errors import ContractError
from vampvae.models.model_spec import ModelSpec
from vampvae.networks.distributions import DiagGaussian, LikelihoodParams, log_normal_diag, sample_reparam
from vampvae.networks.layers import GatedDense, GatedStack, GaussianMLP, JointGaussianMLP, LikelihoodHead
from vampvae.networks.module import Module
from vampvae.networks.priors import Prior, sample_prior
from vampvae.networks.vae import Generation, LatentModel


@dataclass
class HVAERecord:
    log_px: Tensor
    log_pz2: Tensor
    log_pz1: Tensor
    log_qz2: Tensor
    log_qz1: Tensor
    z1: Tensor
    z2: Tensor

    @property
    def kl_part(self) -> Tensor:
        return self.log_pz2 + self.log_pz1 - self.log_qz2 - self.log_qz1

    @property
    def elbo(self) -> Tensor:
        return self.log_px + self.kl_part

    def weighted_elbo(self, beta: float) -> Tensor:
        return self.log_px + self.kl_part * beta


class JointDecoder(Module):
    """p(x | z1, z2)."""

    def __init__(self, spec: ModelSpec, rng: np.random.Generator):
        self.path_z1 = GatedStack(spec.latent_1, spec.hidden, spec.hidden_layers, rng)
        self.path_z2 = GatedStack(spec.latent_2, spec.hidden, spec.hidden_layers, rng)
        self.joint = GatedDense(2 * spec.hidden, spec.hidden, rng)
        self.head = LikelihoodHead(spec.hidden, spec.data_dim, spec.likelihood, rng)

    def __call__(self, z1: Tensor, z2: Tensor) -> LikelihoodParams:
        return self.head(self.joint(concat([self.path_z1(z1), self.path_z2(z2)], axis=-1)))


class HVAE(LatentModel):
    def __init__(self, spec: ModelSpec, rng: np.random.Generator):
        if spec.levels != 2:
            raise ContractError(f"HVAE needs a two-level spec, got levels={spec.levels}")
        self.spec = spec
        self.data_dim = spec.data_dim
        self.q_z2 = GaussianMLP(spec.data_dim, spec.hidden, spec.hidden_layers, spec.latent_2, rng)
        self.q_z1 = JointGaussianMLP(spec.data_dim, spec.latent_2, spec.hidden, spec.hidden_layers,
                                     spec.latent_1, rng)
        self.p_z1 = GaussianMLP(spec.latent_2, spec.hidden, spec.hidden_layers, spec.latent_1, rng)
        self.p_x = JointDecoder(spec, rng)

    def attach_prior(self, prior: Prior) -> None:
        self.prior = prior

    def prior_posterior(self, x: Tensor) -> DiagGaussian:
        return self.q_z2(as_tensor(x))

    def forward_samples(self, x, rng: np.random.Generator, mc_samples: int = 1) -> HVAERecord:
        x = self.check_batch(x)
        self.check_samples(mc_samples)
        n = x.shape[0]
        rows = np.tile(x, (mc_samples, 1))
        inputs = Tensor(rows)

        q2 = self.q_z2(inputs)
        z2 = sample_reparam(q2, rng.standard_normal(q2.mean.shape))
        q1 = self.q_z1(inputs, z2)
        z1 = sample_reparam(q1, rng.standard_normal(q1.mean.shape))

        terms = {
            "log_px": self.p_x(z1, z2).log_prob(rows),
            "log_pz2": self.prior.log_prob(z2),
            "log_pz1": log_normal_diag(z1, self.p_z1(z2)),
            "log_qz2": log_normal_diag(z2, q2),
            "log_qz1": log_normal_diag(z1, q1),
        }
        return HVAERecord(**{name: t.reshape(mc_samples, n) for name, t in terms.items()}, z1=z1, z2=z2)

    def encode_means(self, x) -> dict[str, np.ndarray]:
        """Posterior means; z1 is taken at the posterior mean of z2."""
        x = self.check_batch(x)
        with no_grad():
            inputs = Tensor(x)
            z2 = self.q_z2(inputs).mean
            z1 = self.q_z1(inputs, z2).mean
            return {"z1": z1.numpy(), "z2": z2.numpy()}

    def reconstruct(self, x, rng: np.random.Generator) -> np.ndarray:
        x = self.check_batch(x)
        with no_grad():
            inputs = Tensor(x)
            q2 = self.q_z2(inputs)
            z2 = sample_reparam(q2, rng.standard_normal(q2.mean.shape))
            q1 = self.q_z1(inputs, z2)
            z1 = sample_reparam(q1, rng.standard_normal(q1.mean.shape))
            return self.p_x(z1, z2).mean()

    def decode_top(self, z2: np.ndarray) -> np.ndarray:
        """Likelihood means for top-level codes, with z1 at the mean of p(z1|z2)."""
        with no_grad():
            z2 = Tensor(z2)
            return self.p_x(self.p_z1(z2).mean, z2).mean()

    def generate(self, n: int, rng: np.random.Generator, component: int | None = None) -> Generation:
        draw = sample_prior(self.prior, n, rng, component)
        if n == 0:
            empty = np.zeros((0, self.spec.latent_1))
            return Generation(np.zeros((0, self.data_dim)), {"z1": empty, "z2": draw.z}, draw.components)
        with no_grad():
            z2 = Tensor(draw.z)
            p1 = self.p_z1(z2)
            z1 = sample_reparam(p1, rng.standard_normal(p1.mean.shape))
            means = self.p_x(z1, z2).mean()
        return Generation(means, {"z1": z1.numpy(), "z2": draw.z}, draw.components)


def hvae_forward(x, model: HVAE, rng: np.random.Generator, mc_samples: int = 1) -> HVAERecord:
    return model.forward(x, rng, mc_samples)
