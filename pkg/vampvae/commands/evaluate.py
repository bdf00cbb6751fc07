import logging

import click

from vampvae.commands.common import data_source, dataset_options, handle_errors, prepare_outdir, resolve_dataset
from vampvae.config import ACTIVE_UNIT_THRESHOLD, DEFAULT_IS_SAMPLES, IS_CHUNK_SIZE
from vampvae.models.dataset import Binarization
from vampvae.models.evaluation import EvalConfig
from vampvae.models.model_spec import Likelihood
from vampvae.services.evaluation_service import EvaluationService
from vampvae.services.training_service import TrainingService
from vampvae.storage.artifacts import HISTOGRAM_FILE, REPORT_FILE, write_histogram_csv, write_report
from vampvae.storage.checkpoint import load_checkpoint

logger = logging.getLogger(__name__)


@click.command()
@click.option("--checkpoint", type=click.Path(dir_okay=False), required=True, help="Checkpoint to evaluate.")
@dataset_options
@click.option("--split", type=click.Choice(["test", "val"]), default="test", show_default=True,
              help="Data split to score.")
@click.option("--samples", type=int, default=DEFAULT_IS_SAMPLES, show_default=True,
              help="Importance samples S per example.")
@click.option("--chunk-size", type=int, default=IS_CHUNK_SIZE, show_default=True,
              help="Samples evaluated at once.")
@click.option("--bins", type=int, default=50, show_default=True, help="Histogram bins.")
@click.option("--threshold", type=float, default=ACTIVE_UNIT_THRESHOLD, show_default=True,
              help="Activity threshold for active units.")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed of the importance-sampling streams.")
@click.option("--outdir", type=click.Path(file_okay=False), required=True, help="Directory for all outputs.")
@handle_errors
def evaluate(checkpoint, split, samples, chunk_size, bins, threshold, seed, outdir, **flags):
    """Importance-sampled log-likelihood report (report.json, histogram.csv)."""
    outdir = prepare_outdir(outdir)
    dataset, run = resolve_dataset(data_source(flags, seed), checkpoint)
    model = load_checkpoint(checkpoint)
    config = EvalConfig(is_samples=samples, chunk_size=chunk_size, seed=seed, bins=bins, threshold=threshold)
    dynamic = dataset.binarization == Binarization.DYNAMIC

    mean_elbo = None
    if split == "val":
        # same noise stream as the validation pass during training
        train_seed = run.train.seed if run is not None else seed
        mean_elbo = TrainingService.validation_elbo(model, dataset.val, train_seed, dynamic)

    report = EvaluationService.evaluate(
        model,
        dataset.test if split == "test" else dataset.val,
        config,
        dynamic=dynamic,
        report_bits_per_dim=model.spec.likelihood == Likelihood.DISCRETIZED_LOGISTIC,
        mean_elbo=mean_elbo,
    )
    write_report(report, outdir / REPORT_FILE)
    write_histogram_csv(report.histogram, outdir / HISTOGRAM_FILE)

    click.echo(f"mean {split} LL {report.mean_test_ll:.6f} nats (S={samples})")
    if report.bits_per_dim is not None:
        click.echo(f"bits/dim {report.bits_per_dim:.6f}")
    if mean_elbo is not None:
        click.echo(f"mean {split} ELBO {mean_elbo:.6f}")
    if report.note:
        click.echo(f"note: {report.note}")
