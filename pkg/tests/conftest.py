import pytest

from relative_descent.problems import (
    d_optimal_random,
    poisson_random,
    quad_quartic_random,
)
from relative_descent.sampling import make_rng


@pytest.fixture
def rng():
    """Fixed-seed generator."""
    return make_rng(12345)


@pytest.fixture
def quad_quartic_small():
    """n=20 quadratic-plus-quartic instance with a moderate starting point."""
    return quad_quartic_random(n=20, a=0.1, seed=1, x0_scale=1.0)


@pytest.fixture
def poisson_small():
    """m=30, n=10 Poisson instance."""
    return poisson_random(m=30, n=10, seed=2)


@pytest.fixture
def regularized_poisson_small():
    """m=30, n=10 Poisson instance with log-barrier weight 0.1."""
    return poisson_random(m=30, n=10, seed=3, mu_reg=0.1)


@pytest.fixture
def d_optimal_small():
    """m=3, n=10 D-optimal design on the simplex."""
    return d_optimal_random(m=3, n=10, seed=4)


@pytest.fixture
def output_dir(tmp_path, monkeypatch):
    """Empty output directory, also set as RELDESCENT_OUTPUT_DIR."""
    out = tmp_path / "runs"
    monkeypatch.setenv("RELDESCENT_OUTPUT_DIR", str(out))
    return out


@pytest.fixture
def small_config_dict(tmp_path):
    """A quick quad_quartic experiment with every deterministic-oracle method."""
    return {
        "experiment": {"name": "small", "seed": 7, "replicates": 2, "output_dir": str(tmp_path / "small")},
        "problem": {"builder": "quad_quartic", "params": {"n": 10, "a": 0.1, "seed": 0, "x0_scale": 2.0}},
        "algorithms": {
            "gd": {"method": "gd", "iterations": 20},
            "relgd": {"method": "relgd", "iterations": 20},
            "relrcd": {"method": "relrcd", "epochs": 2, "tau": 1},
        },
    }

