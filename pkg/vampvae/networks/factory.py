import logging

import numpy as np

from vampvae.models.model_spec import ModelSpec
from vampvae.networks.hvae import HVAE
from vampvae.networks.priors import build_prior
from vampvae.networks.vae import VAE
from vampvae.utils import STREAM_NETWORK, STREAM_PRIOR, seeded_rng

logger = logging.getLogger(__name__)

Model = VAE | HVAE


def build_model(spec: ModelSpec, seed: int = 0, train: np.ndarray | None = None) -> Model:
    """
    Build a freshly initialised model for `spec`.

    Network weights and prior parameters come from separate streams of `seed`,
    so two specs that differ only in their prior share identical networks.
    `train` seeds the pseudo-inputs of VampPrior variants.
    """
    net_rng = seeded_rng(seed, STREAM_NETWORK)
    model = HVAE(spec, net_rng) if spec.levels == 2 else VAE(spec, net_rng)
    encoder = model.q_z2 if spec.levels == 2 else model.encoder
    model.attach_prior(build_prior(
        spec.prior,
        latent_dim=spec.prior_latent_dim,
        data_dim=spec.data_dim,
        encoder=encoder,
        rng=seeded_rng(seed, STREAM_PRIOR),
        train=train,
    ))
    logger.debug("Built %s (levels=%d, prior=%s, %d parameters)", type(model).__name__, spec.levels,
                 spec.prior.kind, sum(t.size for t in model.parameters()))
    return model
