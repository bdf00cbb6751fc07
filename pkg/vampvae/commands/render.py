"""Subcommands that draw PGM grids: generate, reconstruct, inspect-prior."""
import click
import numpy as np

from vampvae.commands.common import (data_source, dataset_options, grid_side, handle_errors, prepare_outdir,
                                     resolve_dataset)
from vampvae.errors import ContractError, RangeError
from vampvae.networks.priors import MixtureOfGaussiansPrior, StandardGaussianPrior, VampPrior
from vampvae.storage.checkpoint import load_checkpoint
from vampvae.storage.images import interleave_pairs, write_grid
from vampvae.utils import STREAM_EVALUATION, seeded_rng

checkpoint_option = click.option("--checkpoint", type=click.Path(dir_okay=False), required=True,
                                 help="Trained checkpoint.")
n_option = click.option("--n", type=int, default=25, show_default=True, help="Tiles in the grid (a perfect square).")
seed_option = click.option("--seed", type=int, default=0, show_default=True, help="Sampling seed.")
outdir_option = click.option("--outdir", type=click.Path(file_okay=False), required=True,
                             help="Directory for all outputs.")
component_option = click.option("--component", type=int, default=None,
                                help="Sample only from this mixture component.")


@click.command()
@checkpoint_option
@n_option
@component_option
@seed_option
@outdir_option
@handle_errors
def generate(checkpoint, n, component, seed, outdir):
    """Decode n prior samples into generated.pgm."""
    side = grid_side(n)
    outdir = prepare_outdir(outdir)
    model = load_checkpoint(checkpoint)
    generation = model.generate(n, seeded_rng(seed, STREAM_EVALUATION), component)
    path = write_grid(outdir / "generated.pgm", generation.images, model.spec.image_shape, cols=side)
    click.echo(f"wrote {path}")


@click.command()
@checkpoint_option
@dataset_options
@n_option
@seed_option
@outdir_option
@handle_errors
def reconstruct(checkpoint, n, seed, outdir, **flags):
    """First n test rows next to their reconstructions, in reconstructions.pgm."""
    side = grid_side(n)
    outdir = prepare_outdir(outdir)
    dataset, _ = resolve_dataset(data_source(flags, seed), checkpoint)
    model = load_checkpoint(checkpoint)
    originals = dataset.test[:n]
    if len(originals) < n:
        raise ContractError(f"the test split has only {len(originals)} rows, {n} requested")
    recon = model.reconstruct(originals, seeded_rng(seed, STREAM_EVALUATION))
    path = write_grid(outdir / "reconstructions.pgm", interleave_pairs(originals, recon),
                      model.spec.image_shape, cols=2 * side)
    click.echo(f"wrote {path}")


@click.command("inspect-prior")
@checkpoint_option
@n_option
@component_option
@seed_option
@outdir_option
@handle_errors
def inspect_prior(checkpoint, n, component, seed, outdir):
    """
    Render the prior's parameters: pseudo-inputs for VampPrior variants,
    decoded component means for MoG. With --component k also decode n samples
    from component k.
    """
    side = grid_side(n)
    outdir = prepare_outdir(outdir)
    model = load_checkpoint(checkpoint)
    prior = model.prior
    if isinstance(prior, StandardGaussianPrior):
        raise ContractError("the standard Gaussian prior has no inspectable prior parameters")
    if component is not None and not 0 <= component < prior.n_components:
        raise RangeError(f"component {component} out of range for K={prior.n_components}")

    shown = min(n, prior.n_components)
    if isinstance(prior, VampPrior):
        images = prior.inputs().numpy()[:shown]
        path = write_grid(outdir / "pseudo_inputs.pgm", np.clip(images, 0.0, 1.0), model.spec.image_shape, cols=side)
    elif isinstance(prior, MixtureOfGaussiansPrior):
        images = model.decode_top(prior.means.numpy()[:shown])
        path = write_grid(outdir / "mog_means.pgm", images, model.spec.image_shape, cols=side)
    else:
        raise ContractError(f"cannot inspect prior of type {type(prior).__name__}")
    click.echo(f"wrote {path}")

    if component is not None:
        generation = model.generate(n, seeded_rng(seed, STREAM_EVALUATION), component)
        path = write_grid(outdir / f"component_{component}.pgm", generation.images, model.spec.image_shape, cols=side)
        click.echo(f"wrote {path}")
