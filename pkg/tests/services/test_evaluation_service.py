import math

import numpy as np
import pytest
from scipy.special import logsumexp

from vampvae.errors import ContractError
from vampvae.models.evaluation import EvalConfig
from vampvae.networks.linear_gaussian import LinearGaussianVAE
from vampvae.networks.priors import StandardGaussianPrior
from vampvae.services.evaluation_service import SINGLE_SAMPLE_NOTE, EvaluationService


@pytest.fixture()
def linear_model(rng):
    return LinearGaussianVAE.random(3, 6, 0.2, rng)


# ---------------------------
# IMPORTANCE SAMPLING
# ---------------------------
@pytest.mark.parametrize("samples", [1, 10, 100])
def test_importance_sampling_recovers_the_exact_marginal(samples, linear_model, rng):
    x = rng.normal(size=(1, 6))
    estimate = EvaluationService.is_log_likelihood(x, linear_model, samples, rng, chunk_size=7)
    assert estimate == pytest.approx(linear_model.log_marginal(x)[0], abs=1e-8)


def test_single_sample_is_one_elbo_draw(tiny_model, binary_batch):
    model = tiny_model(levels=2, prior="vamp")
    x = binary_batch(n=1)
    estimate = EvaluationService.is_log_likelihood(x, model, 1, np.random.default_rng(6))
    elbo = model.forward(x, np.random.default_rng(6)).elbo.data[0]
    assert estimate == pytest.approx(elbo, rel=1e-14)


def test_chunking_does_not_change_the_estimate(tiny_model, binary_batch):
    model = tiny_model(levels=1, prior="mog")
    x = binary_batch(n=1)
    whole = EvaluationService.log_importance_weights(x, model, 40, np.random.default_rng(1), chunk_size=40)
    split = EvaluationService.log_importance_weights(x, model, 40, np.random.default_rng(1), chunk_size=7)
    np.testing.assert_allclose(split, whole, rtol=1e-12)
    assert whole.shape == (40,)


def _grouped_bound(log_weights, size):
    groups = log_weights.reshape(-1, size)
    return float(np.mean(logsumexp(groups, axis=1) - math.log(size)))


def test_more_samples_tighten_the_bound(tiny_model, binary_batch):
    """Averaged over the same 1000 draws, merging groups of weights can only raise the bound."""
    model = tiny_model(levels=1, prior="vamp")
    x = binary_batch(n=1)
    log_weights = EvaluationService.log_importance_weights(x, model, 1000, np.random.default_rng(0))
    bounds = [_grouped_bound(log_weights, size) for size in (1, 10, 100, 1000)]
    assert np.all(np.diff(bounds) >= -1e-12)
    assert bounds[-1] == pytest.approx(
        EvaluationService.is_log_likelihood(x, model, 1000, np.random.default_rng(0)), rel=1e-12)


@pytest.mark.parametrize("levels, prior", [(1, "sg"), (2, "mog")])
def test_importance_sampling_is_at_least_the_mean_elbo(levels, prior, tiny_model, binary_batch):
    model = tiny_model(levels=levels, prior=prior)
    x = binary_batch(n=1)
    log_weights = EvaluationService.log_importance_weights(x, model, 200, np.random.default_rng(3))
    estimate = EvaluationService.is_log_likelihood(x, model, 200, np.random.default_rng(3))
    assert estimate >= log_weights.mean()


def test_importance_sampling_needs_a_sample(linear_model):
    with pytest.raises(ContractError):
        EvaluationService.is_log_likelihood(np.zeros(6), linear_model, 0, np.random.default_rng(0))


def test_importance_sampling_scores_one_row(linear_model):
    with pytest.raises(ContractError):
        EvaluationService.is_log_likelihood(np.zeros((2, 6)), linear_model, 5, np.random.default_rng(0))


# ---------------------------
# BITS PER DIMENSION
# ---------------------------
def test_bits_per_dim():
    assert EvaluationService.bits_per_dim(-784 * math.log(2.0), 784) == pytest.approx(1.0)
    assert EvaluationService.bits_per_dim(0.0, 10) == 0.0


# ---------------------------
# ELBO DECOMPOSITION
# ---------------------------
@pytest.mark.parametrize("levels, prior", [(1, "sg"), (1, "vamp"), (2, "mog"), (2, "weighted_vamp")])
def test_sampled_decomposition_equals_the_direct_elbo(levels, prior, tiny_model, binary_batch):
    model = tiny_model(levels=levels, prior=prior, seed=3)
    x = binary_batch(n=6)
    parts = EvaluationService.elbo_decomposition(x, model, 4, np.random.default_rng(0), entropy="sampled")
    seed = int(np.random.default_rng(0).integers(2 ** 63))
    direct = model.forward(x, np.random.default_rng(seed), mc_samples=4).elbo.data.mean()
    assert parts.elbo_sum == pytest.approx(direct, abs=1e-9)
    assert parts.recon + parts.posterior_entropy - parts.cross_entropy_term == pytest.approx(parts.elbo_sum)


def test_analytic_entropy_is_close_to_the_sampled_one(tiny_model, binary_batch):
    model = tiny_model(levels=1, prior="sg")
    x = binary_batch(n=6)
    sampled = EvaluationService.elbo_decomposition(x, model, 2000, np.random.default_rng(0), entropy="sampled")
    analytic = EvaluationService.elbo_decomposition(x, model, 2000, np.random.default_rng(0))
    assert analytic.entropy == "analytic"
    assert analytic.posterior_entropy == pytest.approx(sampled.posterior_entropy, abs=0.05)


def test_matched_posterior_and_prior(tiny_model, binary_batch):
    """An encoder emitting N(0, I) under the standard prior: entropy and cross-entropy are both M/2 (1 + ln 2pi)."""
    model = tiny_model(levels=1, prior="sg")
    for tensor in model.encoder.head.parameters():
        tensor.data = np.zeros_like(tensor.data)
    parts = EvaluationService.elbo_decomposition(binary_batch(n=10), model, 1000, np.random.default_rng(0),
                                                 entropy="analytic")
    expected = 0.5 * 2 * (1.0 + math.log(2.0 * math.pi))
    assert parts.posterior_entropy == pytest.approx(expected, rel=1e-12)
    assert parts.cross_entropy_term == pytest.approx(expected, abs=0.05)


def test_decomposition_rejects_empty_data(tiny_model):
    with pytest.raises(ContractError):
        EvaluationService.elbo_decomposition(np.zeros((0, 6)), tiny_model(), 1, np.random.default_rng(0))


# ---------------------------
# ACTIVE UNITS
# ---------------------------
class ConstantDimsModel:
    """Posterior means with unit variance across data except in dims 3 and 7."""

    def __init__(self, rng):
        self.rng = rng

    def encode_means(self, x):
        means = self.rng.normal(size=(len(x), 10))
        means[:, [3, 7]] = 0.25
        return {"z": means}


def test_constant_dims_are_inactive(rng):
    data = np.zeros((500, 4))
    units = EvaluationService.active_units(data, ConstantDimsModel(rng))
    assert units.counts == {"z": 8}
    assert units.scores["z"][3] == 0.0 and units.scores["z"][7] == 0.0


def test_infinite_threshold_leaves_nothing_active(tiny_model, binary_batch):
    units = EvaluationService.active_units(binary_batch(n=10), tiny_model(levels=2), threshold=math.inf)
    assert units.counts == {"z1": 0, "z2": 0}


def test_active_units_ignore_the_order_of_the_data(tiny_model, binary_batch, rng):
    model = tiny_model(levels=2)
    data = binary_batch(n=30)
    units = EvaluationService.active_units(data, model)
    shuffled = EvaluationService.active_units(data[rng.permutation(30)], model)
    assert shuffled.counts == units.counts
    for level in units.scores:
        np.testing.assert_allclose(shuffled.scores[level], units.scores[level], rtol=1e-12)


def test_active_units_need_two_points(tiny_model, binary_batch):
    with pytest.raises(ContractError):
        EvaluationService.active_units(binary_batch(n=1), tiny_model())


# ---------------------------
# HISTOGRAM
# ---------------------------
def test_histogram_of_one_value():
    histogram = EvaluationService.ll_histogram([-90.0], bins=7)
    assert sum(histogram.counts) == 1
    assert len(histogram.edges) == 8


def test_histogram_of_two_halves():
    assert EvaluationService.ll_histogram([0.0, 1.0, 2.0, 3.0], bins=2).counts == [2, 2]


def test_histogram_conserves_counts(rng):
    histogram = EvaluationService.ll_histogram(rng.normal(size=321), bins=13)
    assert sum(histogram.counts) == 321


def test_histogram_rejects_empty_input():
    with pytest.raises(ContractError):
        EvaluationService.ll_histogram([], bins=3)


# ---------------------------
# FULL REPORT
# ---------------------------
def test_report_mean_is_the_mean_of_examples(tiny_model, synth_dataset):
    model = tiny_model(levels=2, data_dim=synth_dataset.dim, prior="vamp", k=4)
    report = EvaluationService.evaluate(model, synth_dataset.test, EvalConfig(is_samples=20, chunk_size=8, bins=5))
    assert len(report.per_example_ll) == len(synth_dataset.test)
    assert report.mean_test_ll == sum(report.per_example_ll) / len(report.per_example_ll)
    assert report.bits_per_dim is None
    assert report.note is None
    assert set(report.active_units.counts) == {"z1", "z2"}


def test_report_does_not_depend_on_worker_count(tiny_model, synth_dataset, monkeypatch):
    model = tiny_model(levels=1, data_dim=synth_dataset.dim, prior="mog")
    config = EvalConfig(is_samples=10, seed=4)
    monkeypatch.setenv("VAMPVAE_THREADS", "1")
    serial = EvaluationService.evaluate(model, synth_dataset.test, config)
    monkeypatch.setenv("VAMPVAE_THREADS", "4")
    parallel = EvaluationService.evaluate(model, synth_dataset.test, config)
    assert serial.per_example_ll == parallel.per_example_ll


def test_single_sample_report_carries_a_note(linear_model, rng):
    report = EvaluationService.evaluate(linear_model, rng.normal(size=(3, 6)), EvalConfig(is_samples=1),
                                        report_bits_per_dim=True)
    assert report.note == SINGLE_SAMPLE_NOTE
    assert report.bits_per_dim is not None


def test_linear_model_prior_is_standard(linear_model):
    assert isinstance(linear_model.prior, StandardGaussianPrior)
