import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Iterator, Literal

import numpy as np

from vampvae.autodiff import Tensor, log_sum_exp_array, no_grad
from vampvae.config import IS_CHUNK_SIZE, get_thread_count
from vampvae.errors import ContractError
from vampvae.models.evaluation import ActiveUnits, ElboDecomposition, EvalConfig, EvalReport, Histogram
from vampvae.networks.distributions import entropy_diag_gaussian
from vampvae.networks.hvae import HVAE
from vampvae.networks.priors import cross_entropy_to_prior
from vampvae.networks.vae import LatentModel
from vampvae.services.training_service import TrainingService
from vampvae.utils import STREAM_EVALUATION, seeded_rng

logger = logging.getLogger(__name__)

SINGLE_SAMPLE_NOTE = "S=1: the reported likelihood is a single-sample ELBO bound, not an importance-sampled estimate"


def _single_row(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    x = x.reshape(1, -1) if x.ndim == 1 else x
    if x.ndim != 2 or x.shape[0] != 1:
        raise ContractError(f"importance sampling evaluates one example at a time, got shape {x.shape}")
    return x


def _weight_chunks(x: np.ndarray, model: LatentModel, samples: int, rng: np.random.Generator,
                   chunk_size: int) -> Iterator[np.ndarray]:
    if samples < 1:
        raise ContractError(f"importance sampling needs S >= 1, got {samples}")
    if chunk_size < 1:
        raise ContractError(f"chunk size must be >= 1, got {chunk_size}")
    remaining = samples
    with no_grad():
        while remaining:
            count = min(chunk_size, remaining)
            yield model.forward_samples(x, rng, count).elbo.data[:, 0]
            remaining -= count


class EvaluationService:
    """Test-time metrics over a trained latent-variable model."""

    @staticmethod
    def log_importance_weights(x, model: LatentModel, samples: int, rng: np.random.Generator,
                               chunk_size: int = IS_CHUNK_SIZE) -> np.ndarray:
        """All S values log p(x, z_s) - log q(z_s | x), drawn chunk by chunk."""
        return np.concatenate(list(_weight_chunks(_single_row(x), model, samples, rng, chunk_size)))

    @staticmethod
    def is_log_likelihood(x, model: LatentModel, samples: int, rng: np.random.Generator,
                          chunk_size: int = IS_CHUNK_SIZE) -> float:
        """log (1/S) sum_s w_s, accumulated with a running log-sum-exp so memory stays O(chunk)."""
        running = None
        for log_weights in _weight_chunks(_single_row(x), model, samples, rng, chunk_size):
            chunk = float(log_sum_exp_array(log_weights))
            running = chunk if running is None else float(np.logaddexp(running, chunk))
        return running - math.log(samples)

    @staticmethod
    def bits_per_dim(mean_ll_nats: float, dim: int) -> float:
        if dim < 1:
            raise ContractError(f"dimension must be >= 1, got {dim}")
        return -mean_ll_nats / (dim * math.log(2.0))

    @staticmethod
    def elbo_decomposition(data: np.ndarray, model: LatentModel, samples_per_x: int, rng: np.random.Generator,
                           entropy: Literal["analytic", "sampled"] = "analytic") -> ElboDecomposition:
        """
        Split the Monte Carlo ELBO into reconstruction, posterior entropy and
        cross-entropy to the prior.

        One seed drawn from `rng` drives both the model pass and the
        cross-entropy estimate, so all terms share their latent samples. For the
        two-level model the reconstruction term also holds log p(z1|z2) and the
        entropy covers both posterior levels. The default uses the closed-form
        diagonal-Gaussian entropy; with entropy="sampled" it is the sample mean
        of -log q and elbo_sum matches the direct estimate exactly.
        """
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 2 or len(data) == 0:
            raise ContractError("ELBO decomposition needs a non-empty batch")
        if samples_per_x < 1:
            raise ContractError(f"samples_per_x must be >= 1, got {samples_per_x}")
        if entropy not in ("analytic", "sampled"):
            raise ContractError(f"unknown entropy estimate {entropy!r}")
        seed = int(rng.integers(2 ** 63))

        with no_grad():
            record = model.forward_samples(data, np.random.default_rng(seed), samples_per_x)
            if isinstance(model, HVAE):
                recon = record.log_px.data + record.log_pz1.data
                sampled_entropy = -(record.log_qz2.data + record.log_qz1.data)
            else:
                recon = record.log_px.data
                sampled_entropy = -record.log_qz.data

            if entropy == "sampled":
                posterior_entropy = float(sampled_entropy.mean())
            else:
                rows = Tensor(np.tile(data, (samples_per_x, 1)))
                values = entropy_diag_gaussian(model.prior_posterior(rows))
                if isinstance(model, HVAE):
                    values = values + entropy_diag_gaussian(model.q_z1(rows, record.z2))
                posterior_entropy = float(values.mean())

        cross_entropy = cross_entropy_to_prior(data, model, model.prior, samples_per_x, np.random.default_rng(seed))
        recon_mean = float(recon.mean())
        return ElboDecomposition(
            recon=recon_mean,
            posterior_entropy=posterior_entropy,
            cross_entropy_term=cross_entropy,
            elbo_sum=recon_mean + posterior_entropy - cross_entropy,
            entropy=entropy,
        )

    @staticmethod
    def active_units(data: np.ndarray, model: LatentModel, threshold: float = 0.01) -> ActiveUnits:
        """A_d = variance over the data of the posterior mean of z_d; a unit is active when A_d > threshold."""
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 2 or len(data) < 2:
            raise ContractError("active units need at least two data points")
        scores = {level: np.var(means, axis=0, ddof=1) for level, means in model.encode_means(data).items()}
        return ActiveUnits(
            threshold=threshold,
            counts={level: int(np.sum(values > threshold)) for level, values in scores.items()},
            scores={level: values.tolist() for level, values in scores.items()},
        )

    @staticmethod
    def ll_histogram(values, bins: int = 50) -> Histogram:
        """Equal-width bins over [min, max]; a constant sample gets a unit-wide range around its value."""
        values = np.asarray(values, dtype=np.float64).reshape(-1)
        if values.size == 0:
            raise ContractError("histogram of an empty sample")
        if bins < 1:
            raise ContractError(f"bins must be >= 1, got {bins}")
        low, high = float(values.min()), float(values.max())
        if low == high:
            low, high = low - 0.5, high + 0.5
        counts, edges = np.histogram(values, bins=bins, range=(low, high))
        return Histogram(edges=edges.tolist(), counts=counts.tolist())

    @staticmethod
    def evaluate(model: LatentModel, data: np.ndarray, config: EvalConfig, *, dynamic: bool = False,
                 report_bits_per_dim: bool = False, mean_elbo: float | None = None) -> EvalReport:
        """
        Importance-sampled log-likelihood of every row plus the summary diagnostics.

        Each example draws from its own stream of `config.seed`, so the result
        does not depend on the number of workers; results are collected in row
        order.
        """
        data = np.asarray(data, dtype=np.float64)
        if len(data) == 0:
            raise ContractError("evaluation split is empty")
        if dynamic:
            data = TrainingService.dynamic_binarize(data, seeded_rng(config.seed, STREAM_EVALUATION))

        def score(index: int) -> float:
            rng = seeded_rng(config.seed, STREAM_EVALUATION, index)
            return EvaluationService.is_log_likelihood(data[index], model, config.is_samples, rng, config.chunk_size)

        workers = min(get_thread_count(), len(data))
        logger.info("Evaluating %d examples with S=%d on %d workers", len(data), config.is_samples, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_example = [float(v) for v in pool.map(score, range(len(data)))]

        mean_ll = sum(per_example) / len(per_example)
        return EvalReport(
            mean_test_ll=mean_ll,
            per_example_ll=per_example,
            bits_per_dim=EvaluationService.bits_per_dim(mean_ll, data.shape[1]) if report_bits_per_dim else None,
            active_units=EvaluationService.active_units(data, model, config.threshold)
            if len(data) >= 2 else ActiveUnits(threshold=config.threshold, counts={}, scores={}),
            histogram=EvaluationService.ll_histogram(per_example, config.bins),
            is_samples=config.is_samples,
            seed=config.seed,
            mean_elbo=mean_elbo,
            note=SINGLE_SAMPLE_NOTE if config.is_samples == 1 else None,
        )
