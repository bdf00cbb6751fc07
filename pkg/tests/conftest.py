import logging
import sys
from pathlib import Path

import numpy as np
import pytest

# Ensure project root is on sys.path so absolute imports like `vampvae.*` resolve
PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from click.testing import CliRunner  # noqa: E402

from vampvae.cli import cli  # noqa: E402
from vampvae.models.model_spec import ModelSpec  # noqa: E402
from vampvae.models.priors import (MoGPriorSpec, SGPriorSpec, VampDataPriorSpec, VampPriorSpec,  # noqa: E402
                                   WeightedVampPriorSpec)
from vampvae.networks.factory import build_model  # noqa: E402
from vampvae.services.dataset_service import DatasetService  # noqa: E402


# ---------------------------
# SLOW ACCEPTANCE RUNS
# ---------------------------
# Paired training runs take minutes; they only run with --runslow.
def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance check (needs --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


# ---------------------------
# LOGGING HYGIENE
# ---------------------------
# Each CLI invocation binds a handler to the runner's stderr; drop it afterwards
# so later tests never write to a closed stream.
@pytest.fixture(autouse=True)
def reset_package_logger():
    yield
    logger = logging.getLogger("vampvae")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    logger.setLevel(logging.NOTSET)


# ---------------------------
# RANDOMNESS
# ---------------------------
@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


# ---------------------------
# TINY MODELS
# ---------------------------
# The dimensions used by the gradient checks: D=6, M=2, hidden=8.
PRIORS = {
    "sg": lambda k: SGPriorSpec(),
    "mog": lambda k: MoGPriorSpec(K=k),
    "vamp": lambda k: VampPriorSpec(K=k),
    "vamp_data": lambda k: VampDataPriorSpec(K=k),
    "weighted_vamp": lambda k: WeightedVampPriorSpec(K=k),
}


@pytest.fixture()
def tiny_spec():
    def _spec(levels=1, prior="sg", k=3, data_dim=6, latent=2, hidden=8, hidden_layers=2, **extra):
        return ModelSpec(levels=levels, data_dim=data_dim, latent_1=latent, latent_2=latent, hidden=hidden,
                         hidden_layers=hidden_layers, prior=PRIORS[prior](k), **extra)

    return _spec


@pytest.fixture()
def tiny_model(tiny_spec):
    def _model(seed=0, train=None, **spec_args):
        return build_model(tiny_spec(**spec_args), seed, train)

    return _model


@pytest.fixture()
def binary_batch():
    def _batch(n=5, dim=6, seed=7):
        return (np.random.default_rng(seed).random((n, dim)) < 0.5).astype(np.float64)

    return _batch


# ---------------------------
# DATA
# ---------------------------
@pytest.fixture(scope="session")
def synth_dataset():
    return DatasetService.synth_clusters(n=120, dim=16, k_clusters=4, seed=0)


# ---------------------------
# CLI
# ---------------------------
# CliRunner plays the part of an HTTP test client for the command line.
@pytest.fixture()
def runner():
    return CliRunner()


SYNTH_FLAGS = ["--dataset", "synth", "--synth-n", "60", "--synth-dim", "16", "--synth-k", "4"]
TINY_FLAGS = ["--latent-1", "2", "--latent-2", "2", "--hidden", "8", "--batch-size", "20"]


@pytest.fixture(scope="session")
def trained_run(tmp_path_factory):
    """A two-level VampPrior (K=8) trained for 3 epochs on tiny synthetic data."""
    outdir = tmp_path_factory.mktemp("run")
    result = CliRunner().invoke(cli, [
        "--log-level", "WARNING", "train", *SYNTH_FLAGS, *TINY_FLAGS,
        "--levels", "2", "--prior", "vamp", "--k", "8", "--max-epochs", "3", "--warmup", "2",
        "--seed", "3", "--outdir", str(outdir),
    ])
    assert result.exit_code == 0, result.output
    return outdir


@pytest.fixture(scope="session")
def sg_run(tmp_path_factory):
    outdir = tmp_path_factory.mktemp("sg_run")
    result = CliRunner().invoke(cli, [
        "--log-level", "WARNING", "train", *SYNTH_FLAGS, *TINY_FLAGS,
        "--levels", "1", "--prior", "sg", "--max-epochs", "1", "--outdir", str(outdir),
    ])
    assert result.exit_code == 0, result.output
    return outdir
