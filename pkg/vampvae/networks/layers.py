import math

import numpy as np

from vampvae.autodiff import Tensor, concat
from vampvae.models.model_spec import Likelihood
from vampvae.networks.distributions import BernoulliParams, DiagGaussian, LikelihoodParams, LogisticParams
from vampvae.networks.module import Module

LOG_SCALE_MIN = -7.0
LOG_SCALE_MAX = 0.0


class Linear(Module):
    """Affine map x @ W + b with Glorot-uniform weights and zero bias."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        bound = math.sqrt(6.0 / (in_features + out_features))
        self.weight = Tensor(rng.uniform(-bound, bound, size=(in_features, out_features)), requires_grad=True)
        self.bias = Tensor(np.zeros(out_features), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return x @ self.weight + self.bias


class GatedDense(Module):
    """(W1 x + b1) * sigmoid(W2 x + b2)."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        self.affine = Linear(in_features, out_features, rng)
        self.gate = Linear(in_features, out_features, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return self.affine(x) * self.gate(x).sigmoid()


class GatedStack(Module):
    def __init__(self, in_features: int, hidden: int, layers: int, rng: np.random.Generator):
        widths = [in_features] + [hidden] * layers
        self.layers = [GatedDense(widths[i], widths[i + 1], rng) for i in range(layers)]

    def __call__(self, x: Tensor) -> Tensor:
        for layer in self.layers:
            x = layer(x)
        return x


class GaussianHead(Module):
    """Emits a DiagGaussian (mean, clamped log_var) from a hidden representation."""

    def __init__(self, in_features: int, latent: int, rng: np.random.Generator):
        self.mean = Linear(in_features, latent, rng)
        self.log_var = Linear(in_features, latent, rng)

    def __call__(self, h: Tensor) -> DiagGaussian:
        return DiagGaussian(self.mean(h), self.log_var(h))


class GaussianMLP(Module):
    """Gated stack followed by a Gaussian head: the shape of every q and p_lambda(z1|z2) network."""

    def __init__(self, in_features: int, hidden: int, layers: int, latent: int, rng: np.random.Generator):
        self.body = GatedStack(in_features, hidden, layers, rng)
        self.head = GaussianHead(hidden, latent, rng)

    def __call__(self, x: Tensor) -> DiagGaussian:
        return self.head(self.body(x))


class JointGaussianMLP(Module):
    """Two inputs, each through its own gated stack, concatenated and joined by one gated layer."""

    def __init__(self, in_a: int, in_b: int, hidden: int, layers: int, latent: int, rng: np.random.Generator):
        self.path_a = GatedStack(in_a, hidden, layers, rng)
        self.path_b = GatedStack(in_b, hidden, layers, rng)
        self.joint = GatedDense(2 * hidden, hidden, rng)
        self.head = GaussianHead(hidden, latent, rng)

    def __call__(self, a: Tensor, b: Tensor) -> DiagGaussian:
        return self.head(self.joint(concat([self.path_a(a), self.path_b(b)], axis=-1)))


class LikelihoodHead(Module):
    """Maps a hidden representation to Bernoulli logits or discretized-logistic (mean, log_scale)."""

    def __init__(self, in_features: int, data_dim: int, likelihood: Likelihood, rng: np.random.Generator):
        self.likelihood = likelihood
        self.loc = Linear(in_features, data_dim, rng)
        if likelihood == Likelihood.DISCRETIZED_LOGISTIC:
            self.log_scale = Linear(in_features, data_dim, rng)

    def __call__(self, h: Tensor) -> LikelihoodParams:
        if self.likelihood == Likelihood.BERNOULLI:
            return BernoulliParams(self.loc(h))
        return LogisticParams(self.loc(h).sigmoid(), self.log_scale(h).clamp(LOG_SCALE_MIN, LOG_SCALE_MAX))
