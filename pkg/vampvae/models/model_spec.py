from enum import Enum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from vampvae.models.priors import PriorSpec, SGPriorSpec
from vampvae.utils import infer_image_shape


class Likelihood(str, Enum):
    BERNOULLI = "bernoulli"
    DISCRETIZED_LOGISTIC = "discretized_logistic"


class ModelSpec(BaseModel):
    """
    Architecture of a one-level VAE (levels=1) or the two-level HVAE (levels=2).

    A one-level model uses only `latent_1`; `latent_2` is ignored.
    """
    model_config = ConfigDict(frozen=True)

    levels: Literal[1, 2] = 2
    data_dim: int = Field(ge=1)
    latent_1: int = Field(default=40, ge=1)
    latent_2: int = Field(default=40, ge=1)
    hidden: int = Field(default=300, ge=1)
    hidden_layers: int = Field(default=2, ge=1)
    likelihood: Likelihood = Likelihood.BERNOULLI
    prior: PriorSpec = Field(default_factory=SGPriorSpec)
    image_shape: tuple[int, int] | None = None

    @model_validator(mode="before")
    @classmethod
    def _default_image_shape(cls, data):
        if isinstance(data, dict) and data.get("image_shape") is None and "data_dim" in data:
            data = {**data, "image_shape": infer_image_shape(int(data["data_dim"]))}
        return data

    @model_validator(mode="after")
    def _image_shape_matches(self):
        if self.image_shape[0] * self.image_shape[1] != self.data_dim:
            raise ValueError(f"image_shape {self.image_shape} does not cover data_dim {self.data_dim}")
        return self

    @property
    def prior_latent_dim(self) -> int:
        """Dimension of the latent layer that carries the prior (z2 for HVAE, z for VAE)."""
        return self.latent_2 if self.levels == 2 else self.latent_1
