"""
Objectives with gradient oracles and relative-smoothness certificates.

Each Problem carries its reference function h, feasible set Q and the constants
(L, mu or w, ESO vector v, sigma^2) that the convergence theory needs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .bregman import (
    FeasibleSet,
    FullSpace,
    PositiveOrthant,
    ReferenceFunction,
    Simplex,
    check_domain,
    mirror_step,
    validate_geometry,
)
from .errors import (
    CertificateError,
    DataError,
    DimensionMismatch,
    DomainError,
    OracleUnavailable,
    SingularError,
)
from .models import ProblemInstance
from .sampling import Sampling, make_rng

logger = logging.getLogger(__name__)

EIGEN_TOLERANCE = 1e-9
CONDITION_LIMIT = 1e14


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EsoCertificate:
    """ESO vector v for a sampling, with the optional strong-convexity vector w.

    ``certified`` is False for vectors that are asserted rather than derived.
    """

    sampling: Sampling
    v: np.ndarray
    w: Optional[np.ndarray] = None
    certified: bool = True
    rule: str = "relative_smoothness"

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        if v.shape != (self.sampling.n,):
            raise DimensionMismatch(f"ESO vector has shape {v.shape}, sampling has n={self.sampling.n}")
        if np.any(~(v > 0)):
            raise CertificateError("ESO vector must be strictly positive")
        object.__setattr__(self, "v", _frozen(v))
        if self.w is not None:
            w = np.asarray(self.w, dtype=float)
            if w.shape != v.shape or np.any(w < 0):
                raise CertificateError("strong-convexity vector w must be nonnegative with the shape of v")
            object.__setattr__(self, "w", _frozen(w))

    @property
    def delta(self) -> float:
        """min_i w_i / v_i, zero when no w is known."""
        if self.w is None:
            return 0.0
        return float(np.min(self.w / self.v))

    @property
    def p0(self) -> float:
        return self.sampling.p0


class Problem:
    """Base class: f with exact, partial and (optionally) stochastic gradients."""

    kind: str = "problem"

    def __init__(
        self,
        h: ReferenceFunction,
        Q: FeasibleSet,
        L: float,
        mu: float = 0.0,
        w: Optional[np.ndarray] = None,
        sigma2: Optional[float] = None,
        f_star: Optional[float] = None,
        x_star: Optional[np.ndarray] = None,
    ):
        validate_geometry(h, Q)
        if not L > 0:
            raise CertificateError(f"relative smoothness constant must be positive, got {L}")
        if mu < 0:
            raise CertificateError(f"relative strong convexity constant must be nonnegative, got {mu}")
        self.h = h
        self.Q = Q
        self.L = float(L)
        self.mu = float(mu)
        self.w = _frozen(w) if w is not None else _frozen(np.full(h.n, self.mu))
        self.sigma2 = sigma2
        self.f_star = f_star
        self.x_star = _frozen(x_star) if x_star is not None else None

    @property
    def n(self) -> int:
        return self.h.n

    @property
    def n_components(self) -> int:
        """Number of summands m for epoch accounting of stochastic methods."""
        return 1

    @property
    def has_stochastic_oracle(self) -> bool:
        return False

    def __call__(self, x) -> float:
        return self.value(x)

    def value(self, x) -> float:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def partial_gradient(self, x, coords: Sequence[int] | np.ndarray) -> np.ndarray:
        return self.gradient(x)[np.asarray(coords, dtype=int)]

    def sample_gradient(self, x, tau: int, rng: np.random.Generator) -> np.ndarray:
        raise OracleUnavailable(f"{self.kind} defines no stochastic gradient oracle")

    def eso_certificate(self, sampling: Sampling, rule: str = "spectral") -> EsoCertificate:
        """Relative smoothness always yields v = L * 1 for any sampling."""
        return EsoCertificate(sampling, np.full(self.n, self.L), self.w)

    def with_certificates(self, **overrides) -> "Problem":
        """Shallow copy with some of L, mu, sigma2, f_star, x_star replaced."""
        clone = object.__new__(type(self))
        clone.__dict__.update(self.__dict__)
        for key, value in overrides.items():
            if key not in {"L", "mu", "sigma2", "f_star", "x_star"}:
                raise KeyError(f"unknown certificate {key}")
            if value is None:
                continue
            if key == "mu":
                clone.mu = float(value)
                clone.w = _frozen(np.full(self.n, float(value)))
            elif key == "x_star":
                clone.x_star = _frozen(value)
            else:
                setattr(clone, key, float(value))
        return clone

    def _point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionMismatch(f"expected a point of length {self.n}, got shape {x.shape}")
        check_domain(self.h, x)
        return x

    def to_instance(self, x0: Optional[np.ndarray] = None) -> ProblemInstance:
        raise NotImplementedError


# ============================================================================
# Quadratic plus quartic
# ============================================================================


class QuadQuartic(Problem):
    """f(x) = x'Mx/2 + a sum x_i^4, relative to h(x) = |x|^2/2 + a sum x_i^4 on R^n."""

    kind = "quad_quartic"

    def __init__(self, M, a: float, **certificates):
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionMismatch(f"M must be square, got shape {M.shape}")
        if not np.allclose(M, M.T, atol=1e-12, rtol=0):
            raise DataError("M must be symmetric")
        if not a > 0:
            raise DataError(f"quartic coefficient must be positive, got {a}")
        if np.max(np.diag(M)) > 1 + EIGEN_TOLERANCE:
            raise CertificateError("M has a diagonal entry above 1; normalize by its largest eigenvalue")
        eigenvalues = linalg.eigvalsh(M)
        if eigenvalues[0] < -EIGEN_TOLERANCE:
            raise DataError(f"M is not positive semidefinite (smallest eigenvalue {eigenvalues[0]:.3e})")
        if eigenvalues[-1] > 1 + EIGEN_TOLERANCE:
            raise CertificateError(f"largest eigenvalue of M is {eigenvalues[-1]:.6f} > 1")
        n = M.shape[0]
        self.M = _frozen(M)
        self.a = float(a)
        self.lambda_max = float(eigenvalues[-1])
        certificates.setdefault("f_star", 0.0)
        certificates.setdefault("x_star", np.zeros(n))
        super().__init__(ReferenceFunction.quadratic_quartic(n, a), FullSpace(), L=certificates.pop("L", 1.0),
                         **certificates)

    def value(self, x) -> float:
        x = self._point(x)
        return float(0.5 * x @ self.M @ x + self.a * np.sum(x**4))

    def gradient(self, x) -> np.ndarray:
        x = self._point(x)
        return self.M @ x + 4.0 * self.a * x**3

    def partial_gradient(self, x, coords) -> np.ndarray:
        x = self._point(x)
        idx = np.asarray(coords, dtype=int)
        return self.M[idx] @ x + 4.0 * self.a * x[idx] ** 3

    def eso_certificate(self, sampling: Sampling, rule: str = "spectral") -> EsoCertificate:
        """ESO vector for tau-nice sampling.

        "spectral": v_i = max(1, (1 - beta) M_ii + beta * lambda_max(M)) with
        beta = (tau - 1)/(n - 1); the quartic part needs v_i >= 1 and the quadratic
        part is bounded by the exact tau-nice second moment. At tau = 1 this is
        max(1, M_ii).
        "diagonal": max(a, M_ii), not certified; large iterates violate it.
        """
        diag = np.diag(self.M)
        if rule == "diagonal":
            v = np.maximum(self.a, diag)
            logger.warning(
                f"ESO rule 'diagonal' (max v = {v.max():.4f}) is not certified for the quartic part"
            )
            return EsoCertificate(sampling, v, self.w, certified=False, rule="diagonal")
        if rule != "spectral":
            raise ValueError(f"unknown ESO rule {rule!r}")
        beta = (sampling.tau - 1) / (self.n - 1) if self.n > 1 else 0.0
        v = np.maximum(1.0, (1.0 - beta) * diag + beta * self.lambda_max)
        return EsoCertificate(sampling, v, self.w, certified=True, rule="spectral")

    def to_instance(self, x0=None) -> ProblemInstance:
        return ProblemInstance(
            kind="quad_quartic",
            matrix=self.M.tolist(),
            a=self.a,
            x0=None if x0 is None else np.asarray(x0).tolist(),
            L=self.L,
            mu=self.mu,
            sigma2=self.sigma2,
            f_star=self.f_star,
            x_star=None if self.x_star is None else self.x_star.tolist(),
        )


# ============================================================================
# Poisson / KL regression
# ============================================================================


class PoissonKL(Problem):
    """f(x) = sum_i b_i log(b_i/(Ax)_i) + (Ax)_i - b_i + mu_reg * (-sum log x_j) on x > 0."""

    kind = "poisson_kl"

    def __init__(self, A, b, mu_reg: float = 0.0, **certificates):
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        if A.ndim != 2 or b.shape != (A.shape[0],):
            raise DimensionMismatch(f"A has shape {A.shape} but b has shape {b.shape}")
        if np.any(A < 0):
            raise DataError("A must be entrywise nonnegative")
        if np.any(~(A.sum(axis=1) > 0)):
            raise DataError("every row of A must be nonzero")
        if np.any(~(b > 0)):
            raise DataError("b must be strictly positive")
        if mu_reg < 0:
            raise DataError(f"regularization weight must be nonnegative, got {mu_reg}")
        self.A = _frozen(A)
        self.b = _frozen(b)
        self.mu_reg = float(mu_reg)
        if self.mu_reg > 0:
            self.kind = "regularized_poisson"
        L = certificates.pop("L", float(np.sum(b)) + self.mu_reg)
        mu = certificates.pop("mu", self.mu_reg)
        super().__init__(ReferenceFunction.burg(A.shape[1]), PositiveOrthant(), L=L, mu=mu, **certificates)

    @property
    def n_components(self) -> int:
        return int(self.A.shape[0])

    @property
    def has_stochastic_oracle(self) -> bool:
        return True

    def value(self, x) -> float:
        x = self._point(x)
        Ax = self.A @ x
        kl = np.sum(self.b * np.log(self.b / Ax) + Ax - self.b)
        return float(kl - self.mu_reg * np.sum(np.log(x)))

    def gradient(self, x) -> np.ndarray:
        x = self._point(x)
        return self.A.T @ (1.0 - self.b / (self.A @ x)) - self.mu_reg / x

    def component_gradient(self, x, row: int) -> np.ndarray:
        """m * grad f_row(x) plus the exact regularizer gradient: one oracle outcome."""
        x = self._point(x)
        a_row = self.A[row]
        m = self.n_components
        return m * a_row * (1.0 - self.b[row] / (a_row @ x)) - self.mu_reg / x

    def sample_gradient(self, x, tau: int, rng: np.random.Generator) -> np.ndarray:
        x = self._point(x)
        rows = rng.integers(self.n_components, size=tau)
        A_rows = self.A[rows]
        r = 1.0 - self.b[rows] / (A_rows @ x)
        return self.n_components * (A_rows.T @ r) / tau - self.mu_reg / x

    def to_instance(self, x0=None) -> ProblemInstance:
        return ProblemInstance(
            kind="regularized_poisson" if self.mu_reg > 0 else "poisson_kl",
            matrix=self.A.tolist(),
            vector=self.b.tolist(),
            mu_reg=self.mu_reg if self.mu_reg > 0 else None,
            x0=None if x0 is None else np.asarray(x0).tolist(),
            L=self.L,
            mu=self.mu,
            sigma2=self.sigma2,
            f_star=self.f_star,
            x_star=None if self.x_star is None else self.x_star.tolist(),
        )


# ============================================================================
# D-optimal design
# ============================================================================


class DOptimal(Problem):
    """f(x) = -log det(H Diag(x) H') on the simplex, 1-smooth relative to Burg entropy."""

    kind = "d_optimal"

    def __init__(self, H, **certificates):
        H = np.asarray(H, dtype=float)
        if H.ndim != 2:
            raise DimensionMismatch(f"H must be a matrix, got shape {H.shape}")
        m, n = H.shape
        if n < m + 1:
            raise DataError(f"need n >= m + 1 columns, got m={m}, n={n}")
        if np.linalg.matrix_rank(H) < m:
            raise DataError("H must have full row rank")
        self.H = _frozen(H)
        super().__init__(ReferenceFunction.burg(n), Simplex(), L=certificates.pop("L", 1.0), **certificates)

    def _factor(self, x: np.ndarray):
        W = (self.H * x) @ self.H.T
        try:
            chol = linalg.cho_factor(W, lower=True)
        except linalg.LinAlgError as e:
            raise SingularError(f"H Diag(x) H' is not positive definite: {e}") from e
        d = np.diag(chol[0])
        if (d.max() / d.min()) ** 2 > CONDITION_LIMIT:
            raise SingularError("H Diag(x) H' is numerically singular")
        return chol, d

    def value(self, x) -> float:
        x = self._point(x)
        _, d = self._factor(x)
        return float(-2.0 * np.sum(np.log(d)))

    def gradient(self, x) -> np.ndarray:
        x = self._point(x)
        chol, _ = self._factor(x)
        S = linalg.cho_solve(chol, self.H)
        return -np.sum(self.H * S, axis=0)

    def to_instance(self, x0=None) -> ProblemInstance:
        return ProblemInstance(
            kind="d_optimal",
            matrix=self.H.tolist(),
            x0=None if x0 is None else np.asarray(x0).tolist(),
            L=self.L,
            mu=self.mu,
            f_star=self.f_star,
            x_star=None if self.x_star is None else self.x_star.tolist(),
        )


class EuclideanView(Problem):
    """The same f measured in the Euclidean geometry h = |x|^2/2 with a given L."""

    def __init__(self, base: Problem, L: float):
        if not isinstance(base.Q, FullSpace):
            raise DomainError("the Euclidean view is only defined on the full space")
        self.base = base
        self.kind = f"{base.kind}_euclidean"
        super().__init__(
            ReferenceFunction.squared_half(base.n),
            FullSpace(),
            L=L,
            f_star=base.f_star,
            x_star=base.x_star,
        )

    def value(self, x) -> float:
        return self.base.value(x)

    def gradient(self, x) -> np.ndarray:
        return self.base.gradient(x)

    def partial_gradient(self, x, coords) -> np.ndarray:
        return self.base.partial_gradient(x, coords)


# ============================================================================
# Builders
# ============================================================================


def quad_quartic(M, a: float) -> QuadQuartic:
    return QuadQuartic(M, a)


def poisson_kl(A, b) -> PoissonKL:
    return PoissonKL(A, b)


def regularized_poisson(A, b, mu_reg: float) -> PoissonKL:
    if not mu_reg > 0:
        raise DataError(f"regularized_poisson needs mu_reg > 0, got {mu_reg}")
    return PoissonKL(A, b, mu_reg=mu_reg)


def d_optimal_design(H) -> DOptimal:
    return DOptimal(H)


def euclidean_view(p: Problem, L: float) -> EuclideanView:
    return EuclideanView(p, L)


def normalized_gram(A: np.ndarray) -> np.ndarray:
    """M = A'A / lambda_max(A'A), symmetrized."""
    G = A.T @ A
    G = 0.5 * (G + G.T)
    return G / linalg.eigvalsh(G)[-1]


def quad_quartic_random(n: int = 100, a: float = 0.1, seed: int = 0, x0_scale: float = 1e3):
    """Random instance: A standard normal n x n, M = A'A/lambda_max, x0 ~ N(0, x0_scale^2)."""
    rng = make_rng(seed)
    A = rng.standard_normal((n, n))
    x0 = rng.normal(0.0, x0_scale, n)
    return QuadQuartic(normalized_gram(A), a), x0


def poisson_random(m: int = 100, n: int = 10, seed: int = 0, mu_reg: float = 0.0):
    """Random Poisson instance with A = |A'|, b = |b'|, x0 = |x0'| for standard normal draws."""
    rng = make_rng(seed)
    A = np.abs(rng.standard_normal((m, n)))
    b = np.abs(rng.standard_normal(m))
    x0 = np.abs(rng.standard_normal(n))
    return PoissonKL(A, b, mu_reg=mu_reg), x0


def d_optimal_random(m: int = 3, n: int = 10, seed: int = 0):
    rng = make_rng(seed)
    H = rng.standard_normal((m, n))
    return DOptimal(H), np.full(n, 1.0 / n)


def restricted_gd_smoothness(p: Problem, x0) -> float:
    """Euclidean smoothness constant of quad_quartic over the box |x|_inf^2 <= 2 |x0|_inf^2."""
    if not isinstance(p, QuadQuartic):
        raise TypeError("restricted smoothness is defined for quad_quartic problems")
    return 1.0 + 12.0 * p.a * 2.0 * float(np.max(np.abs(x0))) ** 2


# ============================================================================
# Oracles and helpers
# ============================================================================


def stochastic_grad(p: Problem, x, tau: int, rng: np.random.Generator) -> np.ndarray:
    """Average of tau independent oracle draws; variance scales as 1/tau."""
    if tau < 1:
        raise ValueError(f"minibatch size must be at least 1, got {tau}")
    if not p.has_stochastic_oracle:
        raise OracleUnavailable(f"{p.kind} defines no stochastic gradient oracle")
    return p.sample_gradient(x, tau, rng)


def full_step_point(p: Problem, x, L) -> np.ndarray:
    """x_(t+1,*): the full mirror step from x with scalar L or per-coordinate v."""
    return mirror_step(p.h, p.Q, x, p.gradient(x), L)


def estimate_sigma2(
    p: Problem, x, tau: int = 1, n_draws: int = 2000, rng: Optional[np.random.Generator] = None
) -> tuple[float, bool]:
    """Monte-Carlo (1/mu_h) E|grad f(x) - g~|^2 at x.

    Returns the estimate and whether it is heuristic: BurgLog geometry has no
    global strong-convexity modulus, so its local modulus 1/max(x)^2 is used.
    """
    rng = rng if rng is not None else make_rng(0)
    x = np.asarray(x, dtype=float)
    g = p.gradient(x)
    draws = np.stack([stochastic_grad(p, x, tau, rng) for _ in range(n_draws)])
    variance = float(np.mean(np.sum((draws - g) ** 2, axis=1)))
    if p.h.has_burg:
        modulus = 1.0 / float(np.max(x)) ** 2
        logger.warning("sigma^2 estimate uses the local modulus of Burg entropy and is heuristic")
        return variance / modulus, True
    return variance, False


def from_instance(doc: ProblemInstance) -> tuple[Problem, Optional[np.ndarray]]:
    """Rebuild a Problem (and its stored x0) from a serialized instance."""
    certificates = {
        key: getattr(doc, key)
        for key in ("L", "mu", "sigma2", "f_star")
        if getattr(doc, key) is not None
    }
    if doc.x_star is not None:
        certificates["x_star"] = np.asarray(doc.x_star)
    matrix = np.asarray(doc.matrix, dtype=float)
    if doc.kind == "quad_quartic":
        if doc.a is None:
            raise DataError("quad_quartic instance needs 'a'")
        problem: Problem = QuadQuartic(matrix, doc.a, **certificates)
    elif doc.kind in ("poisson_kl", "regularized_poisson"):
        if doc.vector is None:
            raise DataError("Poisson instance needs 'vector' (b)")
        problem = PoissonKL(matrix, doc.vector, mu_reg=doc.mu_reg or 0.0, **certificates)
    else:
        problem = DOptimal(matrix, **certificates)
    x0 = np.asarray(doc.x0, dtype=float) if doc.x0 is not None else None
    return problem, x0


