import click

from vampvae import __version__
from vampvae.commands.compare import compare
from vampvae.commands.evaluate import evaluate
from vampvae.commands.render import generate, inspect_prior, reconstruct
from vampvae.commands.train import train
from vampvae.config import LOG_LEVEL
from vampvae.log import configure_logging


@click.group()
@click.version_option(__version__, prog_name="vampvae")
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
              default=LOG_LEVEL, show_default=True, help="Console log level (env: VAMPVAE_LOG_LEVEL).")
def cli(log_level):
    """
    Train and evaluate VAEs and two-level HVAEs with standard Gaussian,
    mixture-of-Gaussians and VampPrior priors.
    """
    configure_logging(log_level)


# Training
cli.add_command(train)

# Evaluation
cli.add_command(evaluate)
cli.add_command(compare)

# Images
cli.add_command(generate)
cli.add_command(reconstruct)
cli.add_command(inspect_prior)
