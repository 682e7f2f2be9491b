"""
Built-in experiment configurations reproducing the two benchmark comparisons.

figure1: classical GD (restricted-domain L) vs relGD vs relRCD on a random
quadratic-plus-quartic instance, 10 replicates, 50 epochs.
figure2: relGD vs relSGD with two constant schedules (L and 10 L), a linear
and a square-root schedule on a random Poisson instance, 10 replicates,
100 epochs.
"""

from typing import Callable, Dict

from .errors import ConfigError
from .models import ExperimentConfig


def figure1() -> ExperimentConfig:
    return ExperimentConfig.model_validate(
        {
            "experiment": {"name": "figure1", "seed": 0, "replicates": 10},
            "problem": {
                "builder": "quad_quartic",
                "params": {"n": 100, "a": 0.1, "seed": 0, "x0_scale": 1e3},
            },
            "algorithms": {
                "gd": {"method": "gd", "epochs": 50},
                "relgd": {"method": "relgd", "epochs": 50},
                "relrcd": {"method": "relrcd", "epochs": 50, "tau": 1},
            },
        }
    )


def figure2() -> ExperimentConfig:
    return ExperimentConfig.model_validate(
        {
            "experiment": {"name": "figure2", "seed": 0, "replicates": 10},
            "problem": {"builder": "poisson", "params": {"m": 100, "n": 10, "seed": 0}},
            "algorithms": {
                "relgd": {"method": "relgd", "epochs": 100},
                "relsgd_constant": {
                    "method": "relsgd",
                    "epochs": 100,
                    "schedule": {"kind": "constant"},
                },
                "relsgd_constant_large": {
                    "method": "relsgd",
                    "epochs": 100,
                    "schedule": {"kind": "constant", "scale": 10.0},
                },
                "relsgd_linear": {
                    "method": "relsgd",
                    "epochs": 100,
                    "schedule": {"kind": "linear", "alpha_scale": 0.01},
                },
                "relsgd_sqrt": {
                    "method": "relsgd",
                    "epochs": 100,
                    "schedule": {"kind": "sqrt", "scale": 0.1},
                },
            },
        }
    )


PRESETS: Dict[str, Callable[[], ExperimentConfig]] = {
    "figure1": figure1,
    "figure2": figure2,
}

DESCRIPTIONS: Dict[str, str] = {
    "figure1": "quad_quartic n=100: GD vs relGD vs relRCD (tau=1), 10 seeds, 50 epochs",
    "figure2": (
        "poisson m=100 n=10: relGD vs relSGD with L_t = L, 10 L, L (1 + t/100) and (L/10) sqrt(t), 10 seeds, 100 epochs"
    ),
}


def get_preset(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None
