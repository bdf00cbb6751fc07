from pydantic import BaseModel, Field

from vampvae.models.model_spec import ModelSpec
from vampvae.models.training import TrainConfig


class DataSource(BaseModel):
    """Where a dataset comes from and how it is read."""
    name: str
    train_path: str | None = None
    test_path: str | None = None
    val_path: str | None = None
    fmt: str = "idx"
    dim: int | None = Field(default=None, ge=1)
    scale: float = 1.0
    seed: int = Field(default=0, ge=0, description="Seed of the random validation/test split, where one is drawn.")
    synth_n: int = Field(default=512, ge=3)
    synth_dim: int = Field(default=64, ge=1)
    synth_k: int = Field(default=8, ge=1)


class RunConfig(BaseModel):
    """Everything `train` was invoked with; stored as run.json beside the checkpoints."""
    command: str = "train"
    data: DataSource
    model: ModelSpec
    train: TrainConfig
    outdir: str
