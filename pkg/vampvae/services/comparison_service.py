import logging
from typing import Sequence

from vampvae.errors import ContractError
from vampvae.models.dataset import Binarization, Dataset
from vampvae.models.evaluation import CompareReport, CompareRow, PairedVerdict, SweepCell, SweepRun
from vampvae.models.model_spec import Likelihood, ModelSpec
from vampvae.models.priors import PRIOR_KINDS, make_prior_spec
from vampvae.models.training import TrainConfig
from vampvae.networks.factory import build_model
from vampvae.services.evaluation_service import EvaluationService
from vampvae.services.training_service import TrainingService

logger = logging.getLogger(__name__)

Setting = tuple[str, int | None]


class ComparisonService:
    """Runs that differ only in the prior over the top latent layer."""

    @staticmethod
    def train_and_score(dataset: Dataset, spec: ModelSpec, config: TrainConfig,
                        threshold: float) -> tuple[float, int]:
        """Fit one model and return (test ELBO of the best snapshot, active top-level units on the test split)."""
        dynamic = dataset.binarization == Binarization.DYNAMIC
        model = build_model(spec, config.seed, dataset.train)
        result = TrainingService.fit(dataset.train, dataset.val, model, config, dynamic=dynamic)
        model.load_state_dict(result.best_state)
        test_elbo = TrainingService.validation_elbo(model, dataset.test, config.seed, dynamic)
        top = "z2" if spec.levels == 2 else "z"
        units = EvaluationService.active_units(dataset.test, model, threshold).counts[top]
        return test_elbo, units

    @staticmethod
    def summarize(rows: list[CompareRow], k: int) -> PairedVerdict:
        """ELBO wins are strict; the VampPrior wins an active-unit round on ties."""
        elbo_wins = sum(row.vamp_test_elbo > row.sg_test_elbo for row in rows)
        unit_wins = sum(row.vamp_active_units >= row.sg_active_units for row in rows)
        return PairedVerdict(
            K=k,
            rows=rows,
            vamp_elbo_wins=elbo_wins,
            vamp_active_units_wins=unit_wins,
            elbo_majority=2 * elbo_wins > len(rows),
            active_units_majority=2 * unit_wins > len(rows),
        )

    @staticmethod
    def settings(priors: Sequence[str], ks: Sequence[int]) -> list[Setting]:
        """(prior, K) pairs in the given order; the standard Gaussian appears once with K = None."""
        if not priors:
            raise ContractError("compare needs at least one prior")
        if not ks:
            raise ContractError("compare needs at least one K")
        unknown = [kind for kind in priors if kind not in PRIOR_KINDS]
        if unknown:
            raise ContractError(f"unknown priors {unknown}")
        settings: list[Setting] = []
        for kind in dict.fromkeys(priors):
            if kind == "sg":
                settings.append((kind, None))
            else:
                settings.extend((kind, k) for k in dict.fromkeys(ks))
        return settings

    @staticmethod
    def compare(dataset: Dataset, seeds: list[int], *, priors: Sequence[str] = ("sg", "vamp"),
                ks: Sequence[int] = (50,), levels: int = 2, hidden: int = 100, latent: int = 16,
                hidden_layers: int = 2, likelihood: Likelihood = Likelihood.BERNOULLI,
                config: TrainConfig | None = None, threshold: float = 0.01) -> CompareReport:
        """
        Train one model per (prior, K, seed) with identical networks and
        settings, then average each (prior, K) over the seeds.

        When both the standard Gaussian and the VampPrior are in the sweep,
        every VampPrior K also gets a paired seed-by-seed verdict against SG.
        """
        if not seeds:
            raise ContractError("compare needs at least one seed")
        if len(set(seeds)) != len(seeds):
            raise ContractError(f"seeds must be distinct, got {seeds}")
        settings = ComparisonService.settings(priors, ks)
        config = config or TrainConfig()
        base = dict(levels=levels, data_dim=dataset.dim, latent_1=latent, latent_2=latent, hidden=hidden,
                    hidden_layers=hidden_layers, likelihood=likelihood, image_shape=dataset.image_shape)

        runs: list[SweepRun] = []
        for seed in seeds:
            seeded = config.model_copy(update={"seed": seed})
            for kind, k in settings:
                spec = ModelSpec(**base, prior=make_prior_spec(kind, k))
                test_elbo, units = ComparisonService.train_and_score(dataset, spec, seeded, threshold)
                logger.info("seed %d %s K=%s: elbo=%.4f au=%d", seed, kind, k, test_elbo, units)
                runs.append(SweepRun(prior=kind, K=k, seed=seed, test_elbo=test_elbo, active_units=units))

        cells = []
        for kind, k in settings:
            group = [run for run in runs if run.prior == kind and run.K == k]
            cells.append(SweepCell(
                prior=kind,
                K=k,
                mean_test_elbo=sum(run.test_elbo for run in group) / len(group),
                mean_active_units=sum(run.active_units for run in group) / len(group),
                runs=len(group),
            ))

        verdicts = []
        if ("sg", None) in settings:
            baseline = {run.seed: run for run in runs if run.prior == "sg"}
            for kind, k in settings:
                if kind != "vamp":
                    continue
                rows = [
                    CompareRow(seed=run.seed, sg_test_elbo=baseline[run.seed].test_elbo, vamp_test_elbo=run.test_elbo,
                               sg_active_units=baseline[run.seed].active_units, vamp_active_units=run.active_units)
                    for run in runs if run.prior == kind and run.K == k
                ]
                verdicts.append(ComparisonService.summarize(rows, k))
        return CompareReport(runs=runs, cells=cells, verdicts=verdicts)
