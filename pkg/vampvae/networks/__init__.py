from .distributions import (DiagGaussian, BernoulliParams, LogisticParams, log_normal_diag, sample_reparam,
                            log_bernoulli, log_discretized_logistic, kl_diag_gaussians, entropy_diag_gaussian)
from .module import Module
from .layers import Linear, GatedDense, GatedStack, GaussianMLP, JointGaussianMLP, LikelihoodHead
from .priors import (Prior, StandardGaussianPrior, MixtureOfGaussiansPrior, VampPrior, PriorSample,
                     build_prior, log_prior, sample_prior, cross_entropy_to_prior, cross_entropy_samples)
from .vae import VAE, VAERecord, Generation, LatentModel, vae_forward
from .hvae import HVAE, HVAERecord, hvae_forward
from .linear_gaussian import LinearGaussianVAE
from .factory import Model, build_model
