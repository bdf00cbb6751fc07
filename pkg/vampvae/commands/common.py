"""Options and error handling shared by every subcommand."""
import functools
import logging
import math
from pathlib import Path

import click
from pydantic import ValidationError

from vampvae.errors import ContractError, StorageError, VampError
from vampvae.models.dataset import Dataset
from vampvae.models.run import DataSource, RunConfig
from vampvae.services.dataset_service import DatasetService

logger = logging.getLogger(__name__)

RUN_FILE = "run.json"
DATASET_NAMES = ("synth", "mnist", "dynamic-mnist", "static-mnist", "omniglot", "caltech101", "frey",
                 "histopathology")


def _fail(command, error: VampError):
    logger.debug("%s failed", command.__name__, exc_info=True)
    click.echo(f"error: {error.detail}", err=True)
    raise click.exceptions.Exit(error.exit_code)


def handle_errors(command):
    """Report library errors as `error: <detail>` and exit with the error's code."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except VampError as exc:
            _fail(command, exc)
        except OSError as exc:
            _fail(command, StorageError.from_os_error(exc))
        except ValidationError as exc:
            problems = "; ".join(f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}" for e in exc.errors())
            raise click.UsageError(problems)
    return wrapper


def dataset_options(command):
    """--dataset plus the file, format and synthetic-data flags."""
    options = [
        click.option("--dataset", type=click.Choice(DATASET_NAMES), default=None,
                     help="Dataset profile; 'synth' generates binary clusters instead of reading files."),
        click.option("--train", "train_path", type=click.Path(exists=True, dir_okay=False), default=None,
                     help="Training matrix (IDX or raw)."),
        click.option("--test", "test_path", type=click.Path(exists=True, dir_okay=False), default=None,
                     help="Test matrix."),
        click.option("--val", "val_path", type=click.Path(exists=True, dir_okay=False), default=None,
                     help="Validation matrix, for datasets that ship a fixed one."),
        click.option("--format", "fmt", type=click.Choice(["idx", "raw"]), default="idx", show_default=True,
                     help="Input file format."),
        click.option("--dim", type=int, default=None, help="Row width of raw matrices (default: profile image size)."),
        click.option("--scale", type=float, default=1.0, show_default=True,
                     help="Multiplier applied to raw values before clamping to [0, 1]."),
        click.option("--data-seed", type=int, default=None,
                     help="Seed for random splits and synthetic data (default: --seed)."),
        click.option("--synth-n", type=int, default=512, show_default=True, help="Synthetic rows."),
        click.option("--synth-dim", type=int, default=64, show_default=True, help="Synthetic row width."),
        click.option("--synth-k", type=int, default=8, show_default=True, help="Synthetic clusters."),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def data_source(kwargs: dict, seed: int) -> DataSource | None:
    """Pop the dataset flags from `kwargs`; None when --dataset was not given."""
    flags = {key: kwargs.pop(key) for key in ("dataset", "train_path", "test_path", "val_path", "fmt", "dim",
                                              "scale", "data_seed", "synth_n", "synth_dim", "synth_k")}
    if flags["dataset"] is None:
        return None
    data_seed = flags.pop("data_seed")
    return DataSource(name=flags.pop("dataset"), seed=seed if data_seed is None else data_seed, **flags)


def load_dataset(source: DataSource) -> Dataset:
    return DatasetService.load(
        source.name, train_path=source.train_path, test_path=source.test_path, val_path=source.val_path,
        fmt=source.fmt, dim=source.dim, scale=source.scale, seed=source.seed,
        synth_n=source.synth_n, synth_dim=source.synth_dim, synth_k=source.synth_k,
    )


def read_run_config(checkpoint: str | Path) -> RunConfig | None:
    path = Path(checkpoint).parent / RUN_FILE
    if not path.exists():
        return None
    return RunConfig.model_validate_json(path.read_text(encoding="utf-8"))


def resolve_dataset(source: DataSource | None, checkpoint: str | Path) -> tuple[Dataset, RunConfig | None]:
    """Dataset from explicit flags, else from the run.json written next to the checkpoint."""
    run = read_run_config(checkpoint)
    if source is None:
        if run is None:
            raise ContractError(f"no --dataset given and no {RUN_FILE} next to {checkpoint}")
        source = run.data
    return load_dataset(source), run


def prepare_outdir(outdir: str) -> Path:
    path = Path(outdir)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StorageError(f"cannot create output directory {path}: {exc.strerror or exc}")
    return path


def grid_side(n: int) -> int:
    side = math.isqrt(n)
    if n < 1 or side * side != n:
        raise click.BadParameter(f"grid size must be a positive perfect square, got {n}", param_hint="--n")
    return side
