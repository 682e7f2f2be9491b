"""
Tests for the command-line interface.
"""

import json

import pytest
from typer.testing import CliRunner

from relative_descent.cli import app
from relative_descent.storage import read_manifest

runner = CliRunner()


@pytest.fixture
def config_file(small_config_dict, tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(small_config_dict))
    return path


@pytest.fixture
def poisson_file(tmp_path):
    path = tmp_path / "poisson.toml"
    path.write_text(
        '[experiment]\nname = "poisson"\n\n'
        '[problem]\nbuilder = "poisson"\nparams = { m = 20, n = 5, seed = 1 }\n\n'
        '[algorithms.relgd]\nmethod = "relgd"\niterations = 5\n'
    )
    return path


class TestPresets:
    def test_list(self):
        result = runner.invoke(app, ["presets"])

        assert result.exit_code == 0
        assert "figure1" in result.output and "figure2" in result.output

    def test_export(self, tmp_path):
        path = tmp_path / "figure2.json"

        result = runner.invoke(app, ["export-preset", "figure2", str(path)])

        assert result.exit_code == 0
        assert set(json.loads(path.read_text())["algorithms"]) == {
            "relgd",
            "relsgd_constant",
            "relsgd_constant_large",
            "relsgd_linear",
            "relsgd_sqrt",
        }

    def test_unknown_preset(self, tmp_path):
        result = runner.invoke(app, ["export-preset", "figure9", str(tmp_path / "x.json")])

        assert result.exit_code == 1
        assert "unknown preset" in result.output


class TestRun:
    """Test the run command."""

    def test_run_config(self, config_file, tmp_path):
        out = tmp_path / "cli-run"

        result = runner.invoke(app, ["run", str(config_file), "--output", str(out), "--workers", "1", "--no-progress"])

        assert result.exit_code == 0, result.output
        assert len(read_manifest(out / "manifest.json").runs) == 6
        assert "relrcd" in result.output

    def test_exported_preset_runs_back(self, small_config_dict, tmp_path):
        """Test a config written as JSON by the runner loads again."""
        out = tmp_path / "first"
        path = tmp_path / "small.json"
        path.write_text(json.dumps(small_config_dict))
        runner.invoke(app, ["run", str(path), "-o", str(out), "-w", "1", "--no-progress", "--no-bounds"])

        result = runner.invoke(
            app, ["run", str(out / "config.json"), "-o", str(tmp_path / "second"), "-w", "1", "--no-progress"]
        )

        assert result.exit_code == 0, result.output

    def test_needs_config_or_preset(self):
        result = runner.invoke(app, ["run"])

        assert result.exit_code == 1

    def test_both_config_and_preset(self, config_file):
        result = runner.invoke(app, ["run", str(config_file), "--preset", "figure1"])

        assert result.exit_code == 1

    def test_invalid_config(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text('[experiment]\nname = "bad"\n')

        result = runner.invoke(app, ["run", str(path)])

        assert result.exit_code == 1
        assert "invalid experiment config" in result.output

    def test_failed_runs_exit_nonzero(self, small_config_dict, tmp_path):
        small_config_dict["algorithms"]["sgd"] = {"method": "relsgd", "iterations": 5, "schedule": {"kind": "constant"}}
        path = tmp_path / "with-sgd.json"
        path.write_text(json.dumps(small_config_dict))

        result = runner.invoke(app, ["run", str(path), "-o", str(tmp_path / "o"), "-w", "1", "--no-progress"])

        assert result.exit_code == 1
        assert (tmp_path / "o" / "manifest.json").exists()


class TestBoundsCommand:
    def test_writes_overlays(self, config_file, tmp_path):
        out = tmp_path / "b"

        result = runner.invoke(app, ["bounds", str(config_file), "-o", str(out)])

        assert result.exit_code == 0, result.output
        assert (out / "bounds" / "relgd.csv").exists()

    def test_missing_certificate(self, poisson_file, tmp_path):
        result = runner.invoke(app, ["bounds", str(poisson_file), "-o", str(tmp_path / "b")])

        assert result.exit_code == 1
        assert "minimizer" in result.output


class TestCheckCommand:
    def test_passes(self, config_file, tmp_path):
        result = runner.invoke(app, ["check", str(config_file), "-o", str(tmp_path / "c")])

        assert result.exit_code == 0, result.output
        assert (tmp_path / "c" / "checks" / "checks.csv").exists()

    def test_scaled_smoothness_fails(self, config_file, tmp_path):
        result = runner.invoke(
            app, ["check", str(config_file), "-o", str(tmp_path / "c"), "--smoothness-scale", "0.1"]
        )

        assert result.exit_code == 1
        assert "relative_smoothness" in result.output
