"""
Tests for the configuration module.

Tests cover:
- RunnerSettings and VerifySettings defaults
- Environment variable loading
- Output directory helper
"""

from pathlib import Path

from relative_descent.config import (
    RunnerSettings,
    VerifySettings,
    get_output_directory,
)


class TestRunnerSettings:
    """Test experiment runner settings."""

    def test_default_values(self, monkeypatch):
        """Test default runner settings."""
        monkeypatch.delenv("RELDESCENT_OUTPUT_DIR", raising=False)
        settings = RunnerSettings()

        assert settings.output_dir == "runs"
        assert settings.workers == 4
        assert settings.log_level == "INFO"
        assert settings.reference_multiplier == 10
        assert settings.reference_max_iterations == 200_000

    def test_env_prefix(self, monkeypatch):
        """Test RELDESCENT_ environment prefix."""
        monkeypatch.setenv("RELDESCENT_OUTPUT_DIR", "/tmp/elsewhere")
        monkeypatch.setenv("RELDESCENT_WORKERS", "2")

        settings = RunnerSettings()

        assert settings.output_dir == "/tmp/elsewhere"
        assert settings.workers == 2

    def test_case_insensitive(self, monkeypatch):
        """Test lowercase environment names are accepted."""
        monkeypatch.setenv("reldescent_log_level", "DEBUG")

        assert RunnerSettings().log_level == "DEBUG"


class TestVerifySettings:
    """Test numerical verification settings."""

    def test_default_values(self):
        """Test default tolerances and sample sizes."""
        settings = VerifySettings()

        assert settings.fd_step == 1e-6
        assert settings.fd_tolerance == 1e-5
        assert settings.slack_tolerance == 1e-9
        assert settings.n_pairs == 1000
        assert settings.n_mc == 2000
        assert settings.enumeration_limit == 5000
        assert settings.pair_log_low < 1 < settings.pair_log_high

    def test_env_prefix(self, monkeypatch):
        """Test RELDESCENT_VERIFY_ prefix does not collide with the runner prefix."""
        monkeypatch.setenv("RELDESCENT_VERIFY_N_PAIRS", "50")

        assert VerifySettings().n_pairs == 50
        assert not hasattr(RunnerSettings(), "n_pairs")


class TestOutputDirectory:
    """Test output directory resolution."""

    def test_named_experiment(self, monkeypatch):
        """Test the experiment name is appended to the base directory."""
        monkeypatch.setenv("RELDESCENT_OUTPUT_DIR", "/data/out")

        assert get_output_directory("figure1") == Path("/data/out/figure1")
        assert get_output_directory() == Path("/data/out")

    def test_explicit_settings(self):
        """Test explicit settings win over the environment."""
        settings = RunnerSettings(output_dir="custom")

        assert get_output_directory("x", settings) == Path("custom/x")
