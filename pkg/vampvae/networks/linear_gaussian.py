"""
Linear-Gaussian latent model with a closed-form marginal.

p(z) = N(0, I), p(x|z) = N(x | W z + b, sigma^2 I). When the columns of W are
orthogonal the exact posterior is diagonal, so the encoder is the true
posterior and every importance weight equals p(x).
"""
import math

import numpy as np

from vampvae.autodiff import Tensor, as_tensor, no_grad
from vampvae.errors import ContractError
from vampvae.networks.distributions import DiagGaussian, log_normal_diag, sample_reparam
from vampvae.networks.priors import StandardGaussianPrior
from vampvae.networks.vae import LatentModel, VAERecord

ORTHOGONALITY_TOLERANCE = 1e-10


class LinearGaussianVAE(LatentModel):
    def __init__(self, weight: np.ndarray, bias: np.ndarray, noise_var: float):
        weight = np.asarray(weight, dtype=np.float64)
        bias = np.asarray(bias, dtype=np.float64)
        if weight.ndim != 2 or bias.shape != (weight.shape[1],):
            raise ContractError(f"weight must be M x D and bias length D, got {weight.shape} and {bias.shape}")
        if noise_var <= 0.0:
            raise ContractError(f"noise variance must be positive, got {noise_var}")
        gram = weight @ weight.T
        off_diagonal = gram - np.diag(np.diag(gram))
        if np.max(np.abs(off_diagonal), initial=0.0) > ORTHOGONALITY_TOLERANCE * max(1.0, np.max(np.abs(gram))):
            raise ContractError("the exact posterior is diagonal only when W has orthogonal columns")
        self.latent_dim, self.data_dim = weight.shape
        self.noise_var = float(noise_var)
        self.weight = Tensor(weight, requires_grad=True)
        self.bias = Tensor(bias, requires_grad=True)
        self.prior = StandardGaussianPrior(self.latent_dim)

    @classmethod
    def random(cls, latent_dim: int, data_dim: int, noise_var: float, rng: np.random.Generator) -> "LinearGaussianVAE":
        """Orthogonal columns with random lengths, via a QR factorisation."""
        if latent_dim > data_dim:
            raise ContractError("orthogonal columns need latent_dim <= data_dim")
        basis, _ = np.linalg.qr(rng.standard_normal((data_dim, latent_dim)))
        scales = rng.uniform(0.5, 2.0, size=latent_dim)
        return cls((basis * scales).T, rng.normal(0.0, 0.5, size=data_dim), noise_var)

    def posterior(self, x: np.ndarray) -> DiagGaussian:
        """Exact q(z|x): precision I + W^T W / sigma^2 is diagonal."""
        w = self.weight.data
        precision = 1.0 + np.sum(w * w, axis=1) / self.noise_var
        mean = ((x - self.bias.data) @ w.T) / self.noise_var / precision
        return DiagGaussian(mean, np.broadcast_to(-np.log(precision), mean.shape))

    def prior_posterior(self, x: Tensor) -> DiagGaussian:
        return self.posterior(as_tensor(x).data)

    def decode(self, z: Tensor) -> DiagGaussian:
        mean = z @ self.weight + self.bias
        return DiagGaussian(mean, np.full(mean.shape, math.log(self.noise_var)))

    def forward_samples(self, x, rng: np.random.Generator, mc_samples: int = 1) -> VAERecord:
        x = self.check_batch(x)
        self.check_samples(mc_samples)
        n = x.shape[0]
        rows = np.tile(x, (mc_samples, 1))
        q = self.posterior(rows)
        z = sample_reparam(q, rng.standard_normal(q.mean.shape))
        return VAERecord(
            log_px=log_normal_diag(rows, self.decode(z)).reshape(mc_samples, n),
            log_pz=self.prior.log_prob(z).reshape(mc_samples, n),
            log_qz=log_normal_diag(z, q).reshape(mc_samples, n),
            z=z,
        )

    def encode_means(self, x) -> dict[str, np.ndarray]:
        x = self.check_batch(x)
        with no_grad():
            return {"z": self.posterior(x).mean.numpy()}

    def log_marginal(self, x) -> np.ndarray:
        """log N(x | b, W W^T + sigma^2 I) per row."""
        x = self.check_batch(x)
        w = self.weight.data
        covariance = w.T @ w + self.noise_var * np.eye(self.data_dim)
        _, log_det = np.linalg.slogdet(covariance)
        centered = x - self.bias.data
        mahalanobis = np.sum(centered * np.linalg.solve(covariance, centered.T).T, axis=1)
        return -0.5 * (self.data_dim * math.log(2.0 * math.pi) + log_det + mahalanobis)
