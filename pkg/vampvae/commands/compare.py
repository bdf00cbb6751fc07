import click

from vampvae.commands.common import data_source, dataset_options, handle_errors, load_dataset, prepare_outdir
from vampvae.config import ACTIVE_UNIT_THRESHOLD
from vampvae.models.priors import PRIOR_KINDS
from vampvae.models.training import TrainConfig
from vampvae.services.comparison_service import ComparisonService
from vampvae.services.dataset_service import DatasetService

COMPARE_FILE = "compare.json"


@click.command()
@dataset_options
@click.option("--seeds", type=int, multiple=True, default=(0, 1, 2), show_default=True,
              help="Training seed; repeat for several runs per setting.")
@click.option("--prior", "priors", type=click.Choice(PRIOR_KINDS), multiple=True, default=("sg", "vamp"),
              show_default=True, help="Prior to train; repeat for several.")
@click.option("--k", "ks", type=int, multiple=True, default=(50,), show_default=True,
              help="Mixture components / pseudo-inputs; repeat to sweep K.")
@click.option("--levels", type=click.IntRange(1, 2), default=2, show_default=True,
              help="1 = one-level VAE, 2 = two-level HVAE.")
@click.option("--hidden", type=int, default=100, show_default=True, help="Hidden units per gated layer.")
@click.option("--latent", type=int, default=16, show_default=True, help="Size of both z1 and z2.")
@click.option("--lr", "learning_rate", type=float, default=5e-4, show_default=True, help="Adam learning rate.")
@click.option("--batch-size", type=int, default=100, show_default=True, help="Mini-batch size.")
@click.option("--warmup", "warmup_epochs", type=int, default=10, show_default=True,
              help="Epochs of linear KL warm-up.")
@click.option("--patience", "early_stop_patience", type=int, default=50, show_default=True,
              help="Epochs without validation improvement before stopping.")
@click.option("--max-epochs", type=int, default=30, show_default=True, help="Epochs per run.")
@click.option("--threshold", type=float, default=ACTIVE_UNIT_THRESHOLD, show_default=True,
              help="Activity threshold for active units.")
@click.option("--outdir", type=click.Path(file_okay=False), required=True, help="Directory for all outputs.")
@handle_errors
def compare(seeds, priors, ks, levels, hidden, latent, threshold, outdir, **kwargs):
    """Train every (prior, K) over several seeds and compare test ELBO and active units (compare.json)."""
    source = data_source(kwargs, 0)
    if source is None:
        raise click.UsageError("--dataset is required")
    outdir = prepare_outdir(outdir)
    dataset = load_dataset(source)
    report = ComparisonService.compare(
        dataset,
        list(seeds),
        priors=priors,
        ks=ks,
        levels=levels,
        hidden=hidden,
        latent=latent,
        likelihood=DatasetService.profile(source.name).likelihood,
        config=TrainConfig(**kwargs),
        threshold=threshold,
    )
    (outdir / COMPARE_FILE).write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")

    for cell in report.cells:
        label = cell.prior if cell.K is None else f"{cell.prior} K={cell.K}"
        click.echo(f"{label}: mean test ELBO {cell.mean_test_elbo:.4f}, "
                   f"mean active units {cell.mean_active_units:.2f} over {cell.runs} seeds")
    for verdict in report.verdicts:
        seeds_run = len(verdict.rows)
        click.echo(f"VampPrior K={verdict.K} wins ELBO in {verdict.vamp_elbo_wins}/{seeds_run} seeds, "
                   f"active units in {verdict.vamp_active_units_wins}/{seeds_run}")
