"""
Settings and Configuration for relative_descent
Centralized runtime configuration using Pydantic BaseSettings
"""

from pathlib import Path

from pydantic_settings import BaseSettings


class RunnerSettings(BaseSettings):
    """Experiment runner settings"""

    # Output
    output_dir: str = "runs"

    # Replicate concurrency (1 runs replicates in-process)
    workers: int = 4

    # Logging
    log_level: str = "INFO"

    # Reference optimum: budget multiplier over the longest relGD run, and a cap
    reference_multiplier: int = 10
    reference_max_iterations: int = 200_000

    class Config:
        env_prefix = "RELDESCENT_"
        case_sensitive = False
        extra = "ignore"


class VerifySettings(BaseSettings):
    """Numerical verification defaults"""

    # Central finite differences
    fd_step: float = 1e-6
    fd_tolerance: float = 1e-5

    # Inequality checks pass when slack >= -slack_tolerance * scale
    slack_tolerance: float = 1e-9
    n_pairs: int = 1000

    # ESO expectation: exact enumeration up to this many subsets, else Monte Carlo
    n_mc: int = 2000
    enumeration_limit: int = 5000

    # Burg-domain pairs are log-uniform over [pair_log_low, pair_log_high]
    pair_log_low: float = 1e-3
    pair_log_high: float = 1e3

    class Config:
        env_prefix = "RELDESCENT_VERIFY_"
        case_sensitive = False
        extra = "ignore"


def get_output_directory(name: str | None = None, settings: RunnerSettings | None = None) -> Path:
    """Get the output directory, optionally for a named experiment.

    A fresh RunnerSettings is read when none is given, so RELDESCENT_OUTPUT_DIR
    changes made after import are honoured.
    """
    settings = settings or RunnerSettings()
    base = Path(settings.output_dir)
    return base / name if name else base
