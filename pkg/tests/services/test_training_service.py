import numpy as np
import pytest

from vampvae.autodiff import Tensor, backward
from vampvae.errors import ContractError, DomainError
from vampvae.models.training import TrainConfig
from vampvae.services.training_service import OptState, TrainingService
from vampvae.storage import decode_checkpoint, encode_checkpoint


def _fit_config(**overrides):
    return TrainConfig(**{"batch_size": 20, "warmup_epochs": 2, "max_epochs": 3, "seed": 0, **overrides})


# ---------------------------
# WARM-UP AND OBJECTIVE
# ---------------------------
@pytest.mark.parametrize("epoch, warmup, expected", [(0, 100, 0.0), (50, 100, 0.5), (150, 100, 1.0), (3, 0, 1.0)])
def test_beta_schedule(epoch, warmup, expected):
    assert TrainingService.beta_schedule(epoch, warmup) == expected


def test_beta_outside_unit_interval(tiny_model, binary_batch):
    with pytest.raises(ContractError):
        TrainingService.objective(binary_batch(), tiny_model(), 1.5, np.random.default_rng(0))


def test_beta_one_is_the_negative_elbo(tiny_model, binary_batch):
    model = tiny_model(levels=2, prior="vamp")
    x = binary_batch()
    loss = TrainingService.objective(x, model, 1.0, np.random.default_rng(3)).item()
    elbo = model.forward(x, np.random.default_rng(3)).elbo.data.mean()
    assert loss == pytest.approx(-elbo, rel=1e-12)


def test_beta_zero_leaves_prior_parameters_without_gradient(tiny_model, binary_batch):
    model = tiny_model(levels=1, prior="mog")
    model.zero_grad()
    backward(TrainingService.objective(binary_batch(), model, 0.0, np.random.default_rng(0)))
    for tensor in model.prior.parameters():
        np.testing.assert_array_equal(tensor.grad, 0.0)


def test_single_sample_iwae_equals_elbo(tiny_model, binary_batch):
    model = tiny_model(levels=1, prior="vamp")
    x = binary_batch()
    elbo = TrainingService.objective(x, model, 1.0, np.random.default_rng(2), kind="elbo").item()
    iwae = TrainingService.objective(x, model, 1.0, np.random.default_rng(2), kind="iwae").item()
    assert iwae == pytest.approx(elbo, rel=1e-12)


def test_iwae_bound_is_tighter(tiny_model, binary_batch):
    model = tiny_model(levels=1, prior="sg")
    x = binary_batch(n=20)
    elbo = TrainingService.objective(x, model, 1.0, np.random.default_rng(2), mc_samples=20).item()
    iwae = TrainingService.objective(x, model, 1.0, np.random.default_rng(2), mc_samples=20, kind="iwae").item()
    assert iwae <= elbo


def test_half_warm_up_is_halfway_between_the_ends(tiny_model, binary_batch):
    model = tiny_model(levels=2, prior="mog")
    x = binary_batch()
    losses = {beta: TrainingService.objective(x, model, beta, np.random.default_rng(5)).item()
              for beta in (0.0, 0.5, 1.0)}
    assert losses[0.5] == pytest.approx(0.5 * (losses[0.0] + losses[1.0]), rel=1e-12)


def test_unknown_objective(tiny_model, binary_batch):
    with pytest.raises(ContractError):
        TrainingService.objective(binary_batch(), tiny_model(), 1.0, np.random.default_rng(0), kind="wake-sleep")


# ---------------------------
# NORMALISED ADAM STEP
# ---------------------------
def test_step_is_invariant_to_gradient_scale():
    runs = []
    for scale in (1.0, 10.0):
        w = Tensor([1.0, -2.0, 0.5], requires_grad=True)
        params = {"w": w}
        opt = OptState.for_params(params)
        for _ in range(3):
            w.grad = scale * np.array([0.3, -0.1, 0.7])
            TrainingService.step(params, opt, 0.01)
        runs.append(w.data.copy())
    np.testing.assert_allclose(runs[0], runs[1], rtol=1e-14)


def test_zero_gradient_block_is_left_alone():
    w = Tensor([1.0, 2.0], requires_grad=True)
    v = Tensor([3.0], requires_grad=True)
    params = {"w": w, "v": v}
    opt = OptState.for_params(params)
    w.grad = np.zeros(2)
    v.grad = np.array([1.0])
    TrainingService.step(params, opt, 0.1)
    np.testing.assert_array_equal(w.data, [1.0, 2.0])
    assert v.data[0] < 3.0


def test_step_needs_every_gradient():
    w = Tensor([1.0], requires_grad=True)
    with pytest.raises(ContractError):
        TrainingService.step({"w": w}, OptState.for_params({"w": w}), 0.1)


def test_weighted_vamp_step_keeps_parameter_shapes(tiny_model, binary_batch):
    model = tiny_model(levels=1, prior="weighted_vamp", k=4)
    params = model.named_parameters()
    shapes = {name: tensor.shape for name, tensor in params.items()}
    model.zero_grad()
    loss = TrainingService.objective(binary_batch(), model, 1.0, np.random.default_rng(0))
    assert loss.shape == ()
    backward(loss)
    TrainingService.step(params, OptState.for_params(params), 0.01)
    assert {name: tensor.shape for name, tensor in params.items()} == shapes
    restored = decode_checkpoint(encode_checkpoint(model))
    np.testing.assert_array_equal(restored.prior.weight_logits.data, model.prior.weight_logits.data)


def test_quadratic_bowl_descends():
    target = np.array([3.0, -1.0, 0.5])
    w = Tensor(np.zeros(3), requires_grad=True)
    params = {"w": w}
    opt = OptState.for_params(params)
    losses = []
    for _ in range(200):
        w.zero_grad()
        loss = ((w - target) * (w - target)).sum()
        losses.append(loss.item())
        backward(loss)
        TrainingService.step(params, opt, 1e-2)
    assert all(later < earlier for earlier, later in zip(losses[5:], losses[6:]))


# ---------------------------
# DYNAMIC BINARIZATION
# ---------------------------
def test_binarization_endpoints(rng):
    out = TrainingService.dynamic_binarize(np.array([[0.0, 1.0] * 50]), rng)
    np.testing.assert_array_equal(out, [[0.0, 1.0] * 50])


def test_binarization_rate(rng):
    out = TrainingService.dynamic_binarize(np.full(10_000, 0.5), rng)
    assert 0.485 <= out.mean() <= 0.515


def test_binarization_is_reproducible():
    batch = np.random.default_rng(0).random((4, 6))
    first = TrainingService.dynamic_binarize(batch, np.random.default_rng(8))
    second = TrainingService.dynamic_binarize(batch, np.random.default_rng(8))
    np.testing.assert_array_equal(first, second)


def test_binarization_rejects_out_of_range_intensities(rng):
    with pytest.raises(DomainError):
        TrainingService.dynamic_binarize(np.array([1.2]), rng)


# ---------------------------
# FIT
# ---------------------------
def test_one_epoch(tiny_model, synth_dataset):
    model = tiny_model(data_dim=synth_dataset.dim, prior="vamp", k=4, train=synth_dataset.train)
    result = TrainingService.fit(synth_dataset.train, synth_dataset.val, model, _fit_config(max_epochs=1))
    assert len(result.log.epochs) == 1
    assert result.log.stop_reason == "max_epochs"
    assert result.log.epochs[0].wallclock_s is None


def test_patience_stops_a_worsening_run(tiny_model, synth_dataset):
    """A validator that only gets worse stops training after 1 + patience epochs."""
    model = tiny_model(data_dim=synth_dataset.dim)
    config = _fit_config(max_epochs=50, early_stop_patience=4)
    result = TrainingService.fit(synth_dataset.train, synth_dataset.val, model, config,
                                 validator=lambda m, epoch: -float(epoch))
    assert len(result.log.epochs) == 5
    assert result.log.stop_reason == "early_stopping"
    assert result.log.best_epoch == 1


def test_best_state_matches_the_best_epoch(tiny_model, synth_dataset):
    model = tiny_model(levels=2, data_dim=synth_dataset.dim, prior="mog", k=3)
    config = _fit_config(max_epochs=4)
    result = TrainingService.fit(synth_dataset.train, synth_dataset.val, model, config)
    model.load_state_dict(result.best_state)
    again = TrainingService.validation_elbo(model, synth_dataset.val, config.seed)
    assert again == result.log.best_val_elbo


def test_fit_is_deterministic(tiny_model, synth_dataset):
    logs = []
    for _ in range(2):
        model = tiny_model(levels=2, data_dim=synth_dataset.dim, prior="vamp", k=4, train=synth_dataset.train)
        result = TrainingService.fit(synth_dataset.train, synth_dataset.val, model, _fit_config(), dynamic=True)
        logs.append(result.log.model_dump_json())
    assert logs[0] == logs[1]


def test_warm_up_is_recorded(tiny_model, synth_dataset):
    model = tiny_model(data_dim=synth_dataset.dim)
    result = TrainingService.fit(synth_dataset.train, synth_dataset.val, model, _fit_config(warmup_epochs=4))
    assert [record.beta for record in result.log.epochs] == [0.25, 0.5, 0.75]


def test_first_epoch_already_carries_some_kl(tiny_model, synth_dataset):
    model = tiny_model(data_dim=synth_dataset.dim)
    result = TrainingService.fit(synth_dataset.train, synth_dataset.val, model, _fit_config(max_epochs=1))
    assert result.log.epochs[0].epoch == 1
    assert result.log.epochs[0].beta == 0.5


def test_wallclock_is_opt_in(tiny_model, synth_dataset):
    model = tiny_model(data_dim=synth_dataset.dim)
    result = TrainingService.fit(synth_dataset.train, synth_dataset.val, model,
                                 _fit_config(max_epochs=1, record_wallclock=True))
    assert result.log.epochs[0].wallclock_s >= 0.0


def test_fit_rejects_empty_splits(tiny_model, synth_dataset):
    with pytest.raises(ContractError):
        TrainingService.fit(synth_dataset.train, synth_dataset.val[:0], tiny_model(data_dim=synth_dataset.dim),
                            _fit_config())
