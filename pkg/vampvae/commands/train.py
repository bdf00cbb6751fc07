import logging

import click

from vampvae.commands.common import RUN_FILE, data_source, dataset_options, handle_errors, load_dataset, prepare_outdir
from vampvae.models.dataset import Binarization
from vampvae.models.model_spec import Likelihood, ModelSpec
from vampvae.models.priors import PRIOR_KINDS, PriorSpec, make_prior_spec
from vampvae.models.run import RunConfig
from vampvae.models.training import TrainConfig
from vampvae.networks.factory import build_model
from vampvae.services.dataset_service import DatasetService
from vampvae.services.training_service import TrainingService
from vampvae.storage.artifacts import BEST_CHECKPOINT, FINAL_CHECKPOINT, TRAINLOG_FILE, write_trainlog
from vampvae.storage.checkpoint import save_checkpoint

logger = logging.getLogger(__name__)


def single_prior(values: tuple[str, ...]) -> str:
    if len(values) > 1:
        raise click.UsageError(f"--prior may be given only once, got {', '.join(values)}")
    return values[0] if values else "vamp"


def prior_spec(kind: str, k: int | None, dataset_name: str) -> PriorSpec:
    """PriorSpec for `kind`; K defaults to the dataset profile's pseudo-input count."""
    if kind != "sg" and k is None:
        k = DatasetService.profile(dataset_name).pseudo_inputs
    return make_prior_spec(kind, k)


def model_options(command):
    options = [
        click.option("--levels", type=click.IntRange(1, 2), default=2, show_default=True,
                     help="1 = one-level VAE, 2 = two-level HVAE."),
        click.option("--prior", "priors", type=click.Choice(PRIOR_KINDS), multiple=True,
                     help="Prior over the top latent layer (give once; default vamp)."),
        click.option("--k", type=int, default=None,
                     help="Mixture components / pseudo-inputs (default 500, 1000 for omniglot)."),
        click.option("--latent-1", type=int, default=40, show_default=True, help="Size of z1 (z for one level)."),
        click.option("--latent-2", type=int, default=40, show_default=True, help="Size of z2."),
        click.option("--hidden", type=int, default=300, show_default=True, help="Hidden units per gated layer."),
        click.option("--hidden-layers", type=int, default=2, show_default=True, help="Gated layers per stack."),
        click.option("--likelihood", type=click.Choice([v.value for v in Likelihood]), default=None,
                     help="Pixel likelihood (default from the dataset profile)."),
    ]
    for option in reversed(options):
        command = option(command)
    return command


@click.command()
@dataset_options
@model_options
@click.option("--lr", "learning_rate", type=float, default=5e-4, show_default=True, help="Adam learning rate.")
@click.option("--batch-size", type=int, default=100, show_default=True, help="Mini-batch size.")
@click.option("--warmup", "warmup_epochs", type=int, default=100, show_default=True,
              help="Epochs of linear KL warm-up.")
@click.option("--patience", "early_stop_patience", type=int, default=50, show_default=True,
              help="Epochs without validation improvement before stopping.")
@click.option("--max-epochs", type=int, default=2000, show_default=True, help="Upper bound on epochs.")
@click.option("--mc-samples", type=int, default=1, show_default=True, help="Monte Carlo samples per data point.")
@click.option("--objective", type=click.Choice(["elbo", "iwae"]), default="elbo", show_default=True,
              help="Training bound.")
@click.option("--record-wallclock", is_flag=True, help="Store per-epoch wall-clock seconds in the log.")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for every random stream.")
@click.option("--outdir", type=click.Path(file_okay=False), required=True, help="Directory for all outputs.")
@handle_errors
def train(**kwargs):
    """Train a VAE/HVAE and write best.ckpt, final.ckpt, trainlog.jsonl and run.json."""
    seed = kwargs.pop("seed")
    source = data_source(kwargs, seed)
    if source is None:
        raise click.UsageError("--dataset is required")
    kind = single_prior(kwargs.pop("priors"))
    outdir = prepare_outdir(kwargs.pop("outdir"))

    dataset = load_dataset(source)
    profile = DatasetService.profile(source.name)
    likelihood = kwargs.pop("likelihood") or profile.likelihood
    spec = ModelSpec(
        levels=kwargs.pop("levels"),
        data_dim=dataset.dim,
        latent_1=kwargs.pop("latent_1"),
        latent_2=kwargs.pop("latent_2"),
        hidden=kwargs.pop("hidden"),
        hidden_layers=kwargs.pop("hidden_layers"),
        likelihood=likelihood,
        prior=prior_spec(kind, kwargs.pop("k"), source.name),
        image_shape=dataset.image_shape,
    )
    config = TrainConfig(seed=seed, **kwargs)

    run = RunConfig(data=source, model=spec, train=config, outdir=str(outdir))
    (outdir / RUN_FILE).write_text(run.model_dump_json(indent=2) + "\n", encoding="utf-8")

    model = build_model(spec, seed, dataset.train)
    result = TrainingService.fit(dataset.train, dataset.val, model, config,
                                 dynamic=dataset.binarization == Binarization.DYNAMIC)
    save_checkpoint(model, outdir / BEST_CHECKPOINT, result.best_state)
    save_checkpoint(model, outdir / FINAL_CHECKPOINT, result.final_state)
    write_trainlog(result.log, outdir / TRAINLOG_FILE)

    click.echo(f"stopped after {len(result.log.epochs)} epochs ({result.log.stop_reason})")
    click.echo(f"best val ELBO {result.log.best_val_elbo:.6f} at epoch {result.log.best_epoch}")
    click.echo(f"final val ELBO {result.log.epochs[-1].val_elbo:.6f}")
