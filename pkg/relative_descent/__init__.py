"""
relative_descent: first-order methods for relatively smooth convex problems.

Relative gradient descent, randomized coordinate descent (with and without
ESO stepsizes) and stochastic gradient descent in a separable Bregman
geometry, together with evaluators of their convergence bounds and numerical
verifiers of the certificates those bounds rely on.
"""

__version__ = "0.1.0"

from .algorithms import (
    Constant,
    FixedHorizonOptimal,
    Linear,
    RunTrace,
    SqrtGrowth,
    gd,
    relgd,
    relrcd,
    relrcds,
    relsgd,
    weighted_output,
)
from .bregman import Box, FullSpace, PositiveOrthant, ReferenceFunction, Simplex, bregman, mirror_step
from .errors import RelativeDescentError
from .problems import d_optimal_design, poisson_kl, quad_quartic, regularized_poisson
from .sampling import Sampling

__all__ = [
    "__version__",
    "Box",
    "Constant",
    "FixedHorizonOptimal",
    "FullSpace",
    "Linear",
    "PositiveOrthant",
    "ReferenceFunction",
    "RelativeDescentError",
    "RunTrace",
    "Sampling",
    "Simplex",
    "SqrtGrowth",
    "bregman",
    "d_optimal_design",
    "gd",
    "mirror_step",
    "poisson_kl",
    "quad_quartic",
    "regularized_poisson",
    "relgd",
    "relrcd",
    "relrcds",
    "relsgd",
    "weighted_output",
]
