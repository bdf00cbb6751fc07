import json

import pytest

from conftest import SYNTH_FLAGS, TINY_FLAGS
from vampvae.cli import cli

COMMANDS = ["train", "evaluate", "compare", "generate", "reconstruct", "inspect-prior"]


@pytest.mark.parametrize("command", COMMANDS)
def test_every_command_has_help(command, runner):
    result = runner.invoke(cli, [command, "--help"])
    assert result.exit_code == 0
    assert "--outdir" in result.output


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert result.output.startswith("vampvae, version")


def test_train_writes_its_outputs(trained_run):
    for name in ("best.ckpt", "final.ckpt", "trainlog.jsonl", "run.json"):
        assert (trained_run / name).is_file(), name
    lines = (trained_run / "trainlog.jsonl").read_text().splitlines()
    assert [json.loads(line)["epoch"] for line in lines] == [1, 2, 3]
    assert [json.loads(line)["beta"] for line in lines] == [0.5, 1.0, 1.0]


def test_run_config_records_the_recipe(trained_run):
    run = json.loads((trained_run / "run.json").read_text())
    assert run["model"]["prior"] == {"kind": "vamp", "K": 8, "squash": True}
    assert run["model"]["levels"] == 2
    assert run["train"]["seed"] == 3
    assert run["data"]["name"] == "synth"


def test_rerun_is_bitwise_identical(runner, trained_run, tmp_path):
    result = runner.invoke(cli, [
        "--log-level", "WARNING", "train", *SYNTH_FLAGS, *TINY_FLAGS,
        "--levels", "2", "--prior", "vamp", "--k", "8", "--max-epochs", "3", "--warmup", "2",
        "--seed", "3", "--outdir", str(tmp_path),
    ])
    assert result.exit_code == 0, result.output
    for name in ("trainlog.jsonl", "best.ckpt", "final.ckpt"):
        assert (tmp_path / name).read_bytes() == (trained_run / name).read_bytes(), name


def test_train_reports_the_best_epoch(runner, tmp_path):
    result = runner.invoke(cli, [
        "--log-level", "WARNING", "train", *SYNTH_FLAGS, *TINY_FLAGS,
        "--levels", "1", "--prior", "mog", "--k", "3", "--max-epochs", "2", "--outdir", str(tmp_path),
    ])
    assert result.exit_code == 0, result.output
    assert "stopped after 2 epochs (max_epochs)" in result.stdout
    assert "best val ELBO" in result.stdout


def test_prior_may_be_given_once(runner, tmp_path):
    result = runner.invoke(cli, ["train", *SYNTH_FLAGS, "--prior", "vamp", "--prior", "mog",
                                 "--outdir", str(tmp_path)])
    assert result.exit_code == 2
    assert "only once" in result.stderr
    assert not (tmp_path / "trainlog.jsonl").exists()


def test_train_needs_a_dataset(runner, tmp_path):
    result = runner.invoke(cli, ["train", "--outdir", str(tmp_path)])
    assert result.exit_code == 2


def test_invalid_hyperparameters_are_usage_errors(runner, tmp_path):
    result = runner.invoke(cli, ["train", *SYNTH_FLAGS, "--batch-size", "0", "--outdir", str(tmp_path)])
    assert result.exit_code == 2
    assert "batch_size" in result.stderr


def test_library_errors_exit_with_one(runner, tmp_path):
    result = runner.invoke(cli, ["train", "--dataset", "frey", "--outdir", str(tmp_path)])
    assert result.exit_code == 1
    assert "error: " in result.stderr


def test_outdir_below_a_file_is_reported(runner, tmp_path):
    blocker = tmp_path / "taken"
    blocker.write_text("")
    result = runner.invoke(cli, ["train", *SYNTH_FLAGS, *TINY_FLAGS, "--max-epochs", "1",
                                 "--outdir", str(blocker / "run")])
    assert result.exit_code == 1
    assert "error: cannot create output directory" in result.stderr


def test_unwritable_checkpoint_is_reported(runner, tmp_path):
    (tmp_path / "best.ckpt").mkdir()
    result = runner.invoke(cli, ["train", *SYNTH_FLAGS, *TINY_FLAGS, "--levels", "1", "--prior", "sg",
                                 "--max-epochs", "1", "--outdir", str(tmp_path)])
    assert result.exit_code == 1
    assert "error:" in result.stderr
    assert "best.ckpt" in result.stderr
