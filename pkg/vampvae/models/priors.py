from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter


class PriorSpecBase(BaseModel):
    """Shared base for every prior configuration."""
    model_config = ConfigDict(frozen=True)


class SGPriorSpec(PriorSpecBase):
    """Standard Gaussian N(0, I) over the top latent layer."""
    kind: Literal["sg"] = "sg"


class MixturePriorSpec(PriorSpecBase):
    """Any K-component mixture prior."""
    K: int = Field(default=500, ge=1, description="Number of mixture components / pseudo-inputs.")


class MoGPriorSpec(MixturePriorSpec):
    """Trainable mixture of K diagonal Gaussians with uniform weights."""
    kind: Literal["mog"] = "mog"


class VampPriorSpec(MixturePriorSpec):
    """
    Mixture of variational posteriors at K trainable pseudo-inputs.

    With `squash` the stored pseudo-inputs are unconstrained and pass through
    the logistic function before reaching the encoder.
    """
    kind: Literal["vamp"] = "vamp"
    squash: bool = True


class VampDataPriorSpec(MixturePriorSpec):
    """VampPrior whose pseudo-inputs are a frozen random subset of the training data."""
    kind: Literal["vamp_data"] = "vamp_data"


class WeightedVampPriorSpec(VampPriorSpec):
    """VampPrior with trainable mixing weights softmax(weight_logits)."""
    kind: Literal["weighted_vamp"] = "weighted_vamp"


PriorSpec = Annotated[
    Union[SGPriorSpec, MoGPriorSpec, VampPriorSpec, VampDataPriorSpec, WeightedVampPriorSpec],
    Field(discriminator="kind"),
]

PRIOR_KINDS = ("sg", "mog", "vamp", "vamp_data", "weighted_vamp")

_prior_adapter = TypeAdapter(PriorSpec)


def make_prior_spec(kind: str, k: int | None = None) -> PriorSpec:
    """PriorSpec of `kind`; `k` is ignored by the standard Gaussian and required by the mixtures."""
    if kind == "sg":
        return SGPriorSpec()
    return _prior_adapter.validate_python({"kind": kind, "K": k})
