from typing import Literal

from pydantic import BaseModel, Field, model_validator


class Histogram(BaseModel):
    """Equal-width bins: len(edges) == len(counts) + 1."""
    edges: list[float]
    counts: list[int]


class ActiveUnits(BaseModel):
    """Active-unit counts and per-dimension activity scores, keyed by latent level ("z", or "z1"/"z2")."""
    threshold: float
    counts: dict[str, int]
    scores: dict[str, list[float]]


class ElboDecomposition(BaseModel):
    """recon + posterior_entropy - cross_entropy_term == elbo_sum."""
    recon: float
    posterior_entropy: float
    cross_entropy_term: float
    elbo_sum: float
    entropy: Literal["analytic", "sampled"] = "analytic"


class EvalConfig(BaseModel):
    is_samples: int = Field(default=5000, ge=1)
    chunk_size: int = Field(default=500, ge=1)
    seed: int = Field(default=0, ge=0)
    bins: int = Field(default=50, ge=1)
    threshold: float = 0.01


class EvalReport(BaseModel):
    """Test-time metrics of one model on one data split."""
    mean_test_ll: float
    per_example_ll: list[float]
    bits_per_dim: float | None = None
    active_units: ActiveUnits
    histogram: Histogram
    is_samples: int
    seed: int
    mean_elbo: float | None = None
    note: str | None = None

    @model_validator(mode="after")
    def _mean_is_consistent(self):
        if not self.per_example_ll:
            raise ValueError("per_example_ll must not be empty")
        mean = sum(self.per_example_ll) / len(self.per_example_ll)
        if abs(mean - self.mean_test_ll) > 1e-12 * max(1.0, abs(mean)):
            raise ValueError("mean_test_ll is not the mean of per_example_ll")
        return self


class CompareRow(BaseModel):
    """One seed of a paired SG-versus-VampPrior run."""
    seed: int
    sg_test_elbo: float
    vamp_test_elbo: float
    sg_active_units: int
    vamp_active_units: int


class PairedVerdict(BaseModel):
    """Seed-by-seed tally of the standard Gaussian against the VampPrior with K pseudo-inputs."""
    K: int
    rows: list[CompareRow]
    vamp_elbo_wins: int
    vamp_active_units_wins: int
    elbo_majority: bool
    active_units_majority: bool


class SweepRun(BaseModel):
    """One trained model of a comparison sweep; K is None for the standard Gaussian."""
    prior: str
    K: int | None = None
    seed: int
    test_elbo: float
    active_units: int


class SweepCell(BaseModel):
    """Seed averages of one (prior, K) setting."""
    prior: str
    K: int | None = None
    mean_test_elbo: float
    mean_active_units: float
    runs: int


class CompareReport(BaseModel):
    """Every run of a sweep, its per-setting averages and the SG-versus-VampPrior verdicts."""
    runs: list[SweepRun]
    cells: list[SweepCell]
    verdicts: list[PairedVerdict] = Field(default_factory=list)
