import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from vampvae.autodiff import Tensor, backward, no_grad
from vampvae.errors import ContractError, DomainError
from vampvae.models.training import EpochRecord, TrainConfig, TrainLog
from vampvae.networks.factory import Model
from vampvae.utils import STREAM_TRAINING, STREAM_VALIDATION, seeded_rng

logger = logging.getLogger(__name__)

NORM_FLOOR = 1e-12
VALIDATION_BATCH = 1000

Validator = Callable[[Model, int], float]


@dataclass
class OptState:
    """Adam moments per parameter block plus the shared step counter."""
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: dict[str, Tensor]) -> "OptState":
        return cls(
            m={name: np.zeros_like(t.data) for name, t in params.items()},
            v={name: np.zeros_like(t.data) for name, t in params.items()},
        )


@dataclass
class FitResult:
    """Training log plus snapshots of the best-validation and the last parameters."""
    log: TrainLog
    best_state: dict[str, np.ndarray] = field(repr=False)
    final_state: dict[str, np.ndarray] = field(repr=False)


class TrainingService:
    """
    Optimisation of a latent-variable model.

    The objective is the warm-up weighted ELBO (or its importance-weighted
    variant); updates are Adam steps on per-block L2-normalised gradients;
    `fit` runs epochs with shuffling, optional dynamic binarization and early
    stopping on validation ELBO.
    """

    @staticmethod
    def beta_schedule(epoch: int, warmup_epochs: int) -> float:
        """min(1, epoch / warmup_epochs); no warm-up means beta = 1 throughout."""
        if warmup_epochs == 0:
            return 1.0
        return min(1.0, epoch / warmup_epochs)

    @staticmethod
    def objective(batch: np.ndarray, model: Model, beta: float, rng: np.random.Generator,
                  mc_samples: int = 1, kind: str = "elbo") -> Tensor:
        """Scalar loss: negative batch mean of the beta-weighted ELBO (or IWAE bound)."""
        if not 0.0 <= beta <= 1.0:
            raise ContractError(f"warm-up coefficient must lie in [0, 1], got {beta}")
        if kind == "elbo":
            record = model.forward(batch, rng, mc_samples)
            return -record.weighted_elbo(beta).mean()
        if kind == "iwae":
            samples = model.forward_samples(batch, rng, mc_samples)
            log_weights = samples.weighted_elbo(beta)
            return -(log_weights.log_sum_exp(axis=0) - math.log(mc_samples)).mean()
        raise ContractError(f"unknown objective {kind!r}")

    @staticmethod
    def step(params: dict[str, Tensor], opt: OptState, lr: float) -> None:
        """Adam update on gradients rescaled to unit L2 norm per parameter block."""
        missing = [name for name, t in params.items() if t.grad is None]
        if missing:
            raise ContractError(f"no gradient for parameters {missing}")
        opt.step += 1
        correction1 = 1.0 - opt.beta1 ** opt.step
        correction2 = 1.0 - opt.beta2 ** opt.step
        for name, tensor in params.items():
            grad = tensor.grad
            norm = float(np.linalg.norm(grad))
            if norm < NORM_FLOOR:
                continue
            grad = grad / norm
            opt.m[name] = opt.beta1 * opt.m[name] + (1.0 - opt.beta1) * grad
            opt.v[name] = opt.beta2 * opt.v[name] + (1.0 - opt.beta2) * grad * grad
            m_hat = opt.m[name] / correction1
            v_hat = opt.v[name] / correction2
            tensor.data = tensor.data - lr * m_hat / (np.sqrt(v_hat) + opt.eps)

    @staticmethod
    def dynamic_binarize(batch: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Independent Bernoulli(intensity) draw for every pixel."""
        batch = np.asarray(batch, dtype=np.float64)
        if batch.size and (batch.min() < 0.0 or batch.max() > 1.0):
            raise DomainError("dynamic binarization needs intensities in [0, 1]")
        return (rng.random(batch.shape) < batch).astype(np.float64)

    @staticmethod
    def validation_elbo(model: Model, val: np.ndarray, seed: int, dynamic: bool = False,
                        batch_size: int = VALIDATION_BATCH) -> float:
        """Mean single-sample ELBO over `val` with noise from the fixed validation stream."""
        if len(val) == 0:
            raise ContractError("validation split is empty")
        rng = seeded_rng(seed, STREAM_VALIDATION)
        data = TrainingService.dynamic_binarize(val, rng) if dynamic else np.asarray(val, dtype=np.float64)
        total = 0.0
        with no_grad():
            for start in range(0, len(data), batch_size):
                total += float(model.forward(data[start:start + batch_size], rng).elbo.data.sum())
        return total / len(data)

    @staticmethod
    def fit(train: np.ndarray, val: np.ndarray, model: Model, config: TrainConfig, *,
            dynamic: bool = False, validator: Validator | None = None) -> FitResult:
        """
        Train `model` in place and return the log with best/final snapshots.

        Each epoch shuffles the training rows, takes one normalised Adam step per
        mini-batch and then scores the model with `validator` (validation ELBO at
        beta = 1 by default). Training stops after `early_stop_patience` epochs
        without improvement or at `max_epochs`.

        Epochs are numbered from 1, so with warm-up the first epoch already
        trains at beta = 1 / warmup_epochs and no update is taken at beta = 0.
        """
        if len(train) == 0 or len(val) == 0:
            raise ContractError("training and validation splits must be non-empty")
        if validator is None:
            def validator(m: Model, epoch: int) -> float:
                return TrainingService.validation_elbo(m, val, config.seed, dynamic)

        params = model.named_parameters()
        opt = OptState.for_params(params)
        rng = seeded_rng(config.seed, STREAM_TRAINING)
        log = TrainLog()
        best_state = model.state_dict()
        stale = 0

        for epoch in range(1, config.max_epochs + 1):
            started = time.perf_counter()
            beta = TrainingService.beta_schedule(epoch, config.warmup_epochs)
            order = rng.permutation(len(train))
            total = 0.0
            for start in range(0, len(order), config.batch_size):
                batch = train[order[start:start + config.batch_size]]
                if dynamic:
                    batch = TrainingService.dynamic_binarize(batch, rng)
                model.zero_grad()
                loss = TrainingService.objective(batch, model, beta, rng, config.mc_samples, config.objective)
                backward(loss)
                TrainingService.step(params, opt, config.learning_rate)
                total += loss.item() * len(batch)

            val_elbo = validator(model, epoch)
            record = EpochRecord(
                epoch=epoch,
                beta=beta,
                train_loss=total / len(train),
                val_elbo=val_elbo,
                wallclock_s=time.perf_counter() - started if config.record_wallclock else None,
            )
            log.epochs.append(record)
            logger.info("epoch %d beta=%.3f train_loss=%.4f val_elbo=%.4f",
                        epoch, beta, record.train_loss, val_elbo)

            if log.best_val_elbo is None or val_elbo > log.best_val_elbo:
                log.best_val_elbo = val_elbo
                log.best_epoch = epoch
                best_state = model.state_dict()
                stale = 0
            else:
                stale += 1
                if stale >= config.early_stop_patience:
                    log.stop_reason = "early_stopping"
                    break
        else:
            log.stop_reason = "max_epochs"

        logger.info("Stopped after %d epochs (%s); best epoch %d with val ELBO %.4f",
                    len(log.epochs), log.stop_reason, log.best_epoch, log.best_val_elbo)
        return FitResult(log=log, best_state=best_state, final_state=model.state_dict())
