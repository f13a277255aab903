"""Tests for CLI interface."""

import json
import shutil
from unittest.mock import patch

import pytest
from click.testing import CliRunner

from lowdim_xray.cli import main
from lowdim_xray.errors import TrainingDivergenceError
from lowdim_xray.physics.tables import table_filename

TINY_EXPERIMENT = {
    "name": "tiny",
    "datasets": [{"name": "A", "n_elements": 2, "n_objects": 40}],
    "models": [{"name": "svd2", "kind": "svd", "dataset": "A", "rank": 2}],
    "evaluations": [{"model": "svd2", "dataset": "A"}],
}


@pytest.fixture
def runner(monkeypatch, tmp_path):
    """Create a CLI test runner with a clean environment."""
    for name in ("LOWDIM_DATA_DIR", "LOWDIM_OUT_DIR", "LOWDIM_LOG_LEVEL", "LOWDIM_SEED"):
        monkeypatch.setenv(name, "")
        monkeypatch.delenv(name)
    monkeypatch.chdir(tmp_path)
    return CliRunner()


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(TINY_EXPERIMENT))
    return path


def experiment_args(config_file, out, data_dir, *extra):
    return ["--config", str(config_file), "--out", str(out), "--data-dir", str(data_dir), *extra]


class TestCLI:
    """Tests for CLI commands."""

    def test_help(self, runner):
        result = runner.invoke(main, ["--help"])

        assert result.exit_code == 0
        for command in ("ingest", "synthesize", "train", "evaluate", "report"):
            assert command in result.output

    def test_full_pipeline(self, runner, config_file, tmp_path, toy_element_dir):
        """Test synthesize, train, evaluate and report in sequence."""
        args = experiment_args(config_file, tmp_path / "out", toy_element_dir)

        synth = runner.invoke(main, ["synthesize", *args])
        assert synth.exit_code == 0, synth.output
        assert "Wrote dataset" in synth.output

        trained = runner.invoke(main, ["train", *args])
        assert trained.exit_code == 0, trained.output
        assert "Saved model" in trained.output

        evaluated = runner.invoke(main, ["evaluate", *args, "--export-codes"])
        assert evaluated.exit_code == 0, evaluated.output
        assert "svd2 on A: mean NMSE" in evaluated.output
        assert (tmp_path / "out" / "reports" / "codes" / "svd2__A.csv").exists()

        reported = runner.invoke(main, ["report", *args])
        assert reported.exit_code == 0, reported.output
        assert "report.md" in reported.output
        assert (tmp_path / "out" / "manifest.json").exists()

    def test_seed_flag_changes_data(self, runner, config_file, tmp_path, toy_element_dir):
        for seed, out in (("1", "a"), ("2", "b")):
            result = runner.invoke(main, ["synthesize", *experiment_args(config_file, tmp_path / out, toy_element_dir, "--seed", seed)])
            assert result.exit_code == 0, result.output

        first = (tmp_path / "a" / "datasets" / "A" / "clean.csv").read_bytes()
        second = (tmp_path / "b" / "datasets" / "A" / "clean.csv").read_bytes()
        assert first != second

    def test_train_without_datasets(self, runner, config_file, tmp_path, toy_element_dir):
        result = runner.invoke(main, ["train", *experiment_args(config_file, tmp_path / "out", toy_element_dir)])

        assert result.exit_code == 4
        assert "Error:" in result.output
        assert "synthesize" in result.output

    def test_missing_config(self, runner, tmp_path, toy_element_dir):
        result = runner.invoke(main, ["synthesize", *experiment_args(tmp_path / "nope.json", tmp_path / "out", toy_element_dir)])
        assert result.exit_code == 4

    def test_invalid_config(self, runner, tmp_path, toy_element_dir):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({**TINY_EXPERIMENT, "evaluations": [{"model": "missing", "dataset": "A"}]}))

        result = runner.invoke(main, ["synthesize", *experiment_args(path, tmp_path / "out", toy_element_dir)])

        assert result.exit_code == 2
        assert "unknown model" in result.output

    def test_invalid_environment(self, runner, monkeypatch, config_file, tmp_path, toy_element_dir):
        monkeypatch.setenv("LOWDIM_SEED", "minus one")
        result = runner.invoke(main, ["synthesize", *experiment_args(config_file, tmp_path / "out", toy_element_dir)])

        assert result.exit_code == 2
        assert "LOWDIM_SEED" in result.output

    def test_missing_element_table(self, runner, config_file, tmp_path, toy_element_dir):
        data_dir = tmp_path / "elements"
        shutil.copytree(toy_element_dir, data_dir)
        (data_dir / table_filename(53)).unlink()

        result = runner.invoke(main, ["synthesize", *experiment_args(config_file, tmp_path / "out", data_dir)])

        assert result.exit_code == 2
        assert "Z=53" in result.output

    def test_no_evaluations(self, runner, tmp_path, toy_element_dir):
        path = tmp_path / "noeval.json"
        path.write_text(json.dumps({**TINY_EXPERIMENT, "evaluations": []}))

        result = runner.invoke(main, ["evaluate", *experiment_args(path, tmp_path / "out", toy_element_dir)])

        assert result.exit_code == 4

    @patch("lowdim_xray.cli.ExperimentRunner.train")
    def test_training_divergence(self, mock_train, runner, config_file, tmp_path, toy_element_dir):
        """Test that a diverging network exits with status 3."""
        mock_train.side_effect = TrainingDivergenceError("loss became nan at epoch 3", epoch=3, batch=0)

        result = runner.invoke(main, ["train", *experiment_args(config_file, tmp_path / "out", toy_element_dir)])

        assert result.exit_code == 3
        assert "loss became nan" in result.output

    @patch("lowdim_xray.cli.ingest_elements")
    def test_ingest(self, mock_ingest, runner, tmp_path):
        mock_ingest.return_value = [tmp_path / "z01.csv", tmp_path / "densities.csv"]

        result = runner.invoke(main, ["ingest", "--data-dir", str(tmp_path), "--n-points", "20"])

        assert result.exit_code == 0
        assert "Wrote 2 files" in result.output
        mock_ingest.assert_called_once_with(tmp_path, 10.0, 200.0, 20)
