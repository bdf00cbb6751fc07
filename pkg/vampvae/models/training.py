from typing import Literal

from pydantic import BaseModel, Field


class TrainConfig(BaseModel):
    """Optimisation recipe: normalized-gradient Adam, warm-up and early stopping."""
    learning_rate: float = Field(default=5e-4, gt=0.0)
    batch_size: int = Field(default=100, ge=1)
    warmup_epochs: int = Field(default=100, ge=0)
    early_stop_patience: int = Field(default=50, ge=1)
    max_epochs: int = Field(default=2000, ge=1)
    mc_samples: int = Field(default=1, ge=1, description="Monte Carlo samples L per data point.")
    objective: Literal["elbo", "iwae"] = "elbo"
    seed: int = Field(default=0, ge=0)
    record_wallclock: bool = False


class EpochRecord(BaseModel):
    """One line of trainlog.jsonl."""
    epoch: int
    beta: float
    train_loss: float
    val_elbo: float
    wallclock_s: float | None = None


class TrainLog(BaseModel):
    epochs: list[EpochRecord] = Field(default_factory=list)
    best_epoch: int = 0
    best_val_elbo: float | None = None
    stop_reason: Literal["max_epochs", "early_stopping"] | None = None
