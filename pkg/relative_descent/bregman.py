"""
Separable reference functions, Bregman distances and mirror steps.

A ReferenceFunction is a tuple of per-coordinate components. All evaluations
are vectorized by grouping coordinates of the same component kind.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, DimensionMismatch, DomainError, RangeError, StepOutOfDomain

EPS = np.finfo(float).eps
RESIDUAL_TOLERANCE = 1e-12
SIMPLEX_TOLERANCE = 1e-12
MAX_BISECTION_STEPS = 200


# ============================================================================
# Components and reference functions
# ============================================================================


class ComponentKind(str, Enum):
    SQUARED_HALF = "squared_half"
    BURG = "burg"
    QUADRATIC_QUARTIC = "quadratic_quartic"


@dataclass(frozen=True)
class Component:
    """One coordinate of a separable h: z^2/2, -log z, or z^2/2 + a z^4."""

    kind: ComponentKind
    a: float = 0.0

    def __post_init__(self):
        if self.kind == ComponentKind.QUADRATIC_QUARTIC and not self.a > 0:
            raise ValueError(f"QuadraticPlusQuartic needs a > 0, got {self.a}")

    @classmethod
    def squared_half(cls) -> "Component":
        return cls(ComponentKind.SQUARED_HALF)

    @classmethod
    def burg(cls) -> "Component":
        return cls(ComponentKind.BURG)

    @classmethod
    def quadratic_quartic(cls, a: float) -> "Component":
        return cls(ComponentKind.QUADRATIC_QUARTIC, float(a))


@dataclass(frozen=True)
class ReferenceFunction:
    """Separable h(x) = sum_i h_i(x_i) built from immutable components."""

    components: tuple[Component, ...]
    _kinds: np.ndarray = field(init=False, repr=False, compare=False)
    _a: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.components) == 0:
            raise ValueError("ReferenceFunction needs at least one component")
        object.__setattr__(self, "components", tuple(self.components))
        kinds = np.array([c.kind.value for c in self.components])
        a = np.array([c.a for c in self.components], dtype=float)
        kinds.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "_kinds", kinds)
        object.__setattr__(self, "_a", a)

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def has_burg(self) -> bool:
        return bool(np.any(self._kinds == ComponentKind.BURG.value))

    @property
    def is_uniform_burg(self) -> bool:
        return bool(np.all(self._kinds == ComponentKind.BURG.value))

    @property
    def is_squared_half(self) -> bool:
        return bool(np.all(self._kinds == ComponentKind.SQUARED_HALF.value))

    def mask(self, kind: ComponentKind) -> np.ndarray:
        return self._kinds == kind.value

    @classmethod
    def squared_half(cls, n: int) -> "ReferenceFunction":
        return cls(tuple(Component.squared_half() for _ in range(n)))

    @classmethod
    def burg(cls, n: int) -> "ReferenceFunction":
        return cls(tuple(Component.burg() for _ in range(n)))

    @classmethod
    def quadratic_quartic(cls, n: int, a: float) -> "ReferenceFunction":
        return cls(tuple(Component.quadratic_quartic(a) for _ in range(n)))

    @classmethod
    def mixed(cls, components: Sequence[Component]) -> "ReferenceFunction":
        return cls(tuple(components))


# ============================================================================
# Feasible sets
# ============================================================================


@dataclass(frozen=True)
class FeasibleSet:
    """Base class of the supported closed convex sets Q."""

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        raise NotImplementedError


@dataclass(frozen=True)
class FullSpace(FeasibleSet):
    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        return bool(np.all(np.isfinite(x)))


@dataclass(frozen=True)
class PositiveOrthant(FeasibleSet):
    """Closed orthant x >= 0; BurgLog coordinates stay strictly positive through the domain of h."""

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        return bool(np.all(x >= -tol))


@dataclass(frozen=True)
class Box(FeasibleSet):
    """Per-coordinate closed intervals [lower_i, upper_i]; infinite ends allowed."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) != len(upper):
            raise DimensionMismatch("Box lower and upper bounds differ in length")
        if any(lo > hi for lo, hi in zip(lower, upper)):
            raise ValueError("Box intervals must be nonempty")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def uniform(cls, n: int, lower: float, upper: float) -> "Box":
        return cls((lower,) * n, (upper,) * n)

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        return bool(np.all(x >= lo - tol) and np.all(x <= hi + tol))


@dataclass(frozen=True)
class Simplex(FeasibleSet):
    """Probability simplex <1, x> = 1, x > 0."""

    def contains(self, x: np.ndarray, tol: float = SIMPLEX_TOLERANCE) -> bool:
        return bool(np.all(x > 0) and abs(float(np.sum(x)) - 1.0) <= max(tol, SIMPLEX_TOLERANCE))


def validate_geometry(h: ReferenceFunction, Q: FeasibleSet) -> None:
    """Reject (h, Q) pairs the mirror step does not support."""
    if isinstance(Q, Simplex) and not h.is_uniform_burg:
        raise ValueError("Simplex feasible set only combines with BurgLog components")
    if isinstance(Q, Box):
        if len(Q.lower) != h.n:
            raise DimensionMismatch(f"Box has {len(Q.lower)} intervals for dimension {h.n}")
        burg = h.mask(ComponentKind.BURG)
        if np.any(np.asarray(Q.upper)[burg] <= 0):
            raise ValueError("Box interval for a BurgLog coordinate must reach positive values")


# ============================================================================
# Evaluation
# ============================================================================


def _as_vector(h: ReferenceFunction, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != h.n:
        raise DimensionMismatch(f"expected a vector of length {h.n}, got shape {x.shape}")
    return x


def check_domain(h: ReferenceFunction, x: np.ndarray) -> None:
    """Raise DomainError if any coordinate leaves its component domain."""
    bad = ~np.isfinite(x)
    bad |= h.mask(ComponentKind.BURG) & ~(x > 0)
    if np.any(bad):
        idx = np.flatnonzero(bad).tolist()
        raise DomainError(f"coordinates {idx[:10]} outside the domain of h")


def in_domain(h: ReferenceFunction, Q: FeasibleSet, x) -> bool:
    x = np.asarray(x, dtype=float)
    if x.shape != (h.n,):
        return False
    try:
        check_domain(h, x)
    except DomainError:
        return False
    return Q.contains(x)


def eval_h_coordinates(h: ReferenceFunction, x) -> np.ndarray:
    """Per-coordinate values h_i(x_i)."""
    x = _as_vector(h, x)
    check_domain(h, x)
    out = 0.5 * x * x
    burg = h.mask(ComponentKind.BURG)
    out[burg] = -np.log(x[burg])
    quartic = h.mask(ComponentKind.QUADRATIC_QUARTIC)
    out[quartic] += h._a[quartic] * x[quartic] ** 4
    return out


def eval_h(h: ReferenceFunction, x) -> float:
    return float(np.sum(eval_h_coordinates(h, x)))


def grad_h(h: ReferenceFunction, x) -> np.ndarray:
    x = _as_vector(h, x)
    check_domain(h, x)
    return _grad_unchecked(h, x)


def _grad_unchecked(h: ReferenceFunction, x: np.ndarray) -> np.ndarray:
    out = x.copy()
    burg = h.mask(ComponentKind.BURG)
    out[burg] = -1.0 / x[burg]
    quartic = h.mask(ComponentKind.QUADRATIC_QUARTIC)
    out[quartic] += 4.0 * h._a[quartic] * x[quartic] ** 3
    return out


def coordinate_bregman(h: ReferenceFunction, x, y) -> np.ndarray:
    """Per-coordinate Bregman terms D_{h_i}(x_i, y_i), each >= 0 and exactly 0 at x_i = y_i."""
    x = _as_vector(h, x)
    y = _as_vector(h, y)
    check_domain(h, x)
    check_domain(h, y)
    d = x - y
    out = 0.5 * d * d
    burg = h.mask(ComponentKind.BURG)
    if np.any(burg):
        r = d[burg] / y[burg]
        out[burg] = r - np.log1p(r)
    quartic = h.mask(ComponentKind.QUADRATIC_QUARTIC)
    if np.any(quartic):
        xq, yq = x[quartic], y[quartic]
        # x^4 - y^4 - 4y^3(x - y) = (x - y)^2 ((x + y)^2 + 2y^2)
        out[quartic] += h._a[quartic] * d[quartic] ** 2 * ((xq + yq) ** 2 + 2.0 * yq * yq)
    return np.maximum(out, 0.0)


def bregman(h: ReferenceFunction, x, y) -> float:
    """D_h(x, y) = h(x) - h(y) - <grad h(y), x - y>."""
    return float(np.sum(coordinate_bregman(h, x, y)))


def weighted_bregman(h: ReferenceFunction, x, y, v) -> float:
    """D_h(x, y)_v = sum_i v_i D_{h_i}(x_i, y_i) for a strictly positive weight vector v."""
    v = np.asarray(v, dtype=float)
    if v.shape != (h.n,):
        raise DimensionMismatch(f"weight vector has shape {v.shape}, expected ({h.n},)")
    if np.any(v <= 0):
        raise ValueError("weights must be strictly positive")
    return float(np.dot(v, coordinate_bregman(h, x, y)))


# ============================================================================
# Gradient inversion
# ============================================================================


def _solve_cubic(a: np.ndarray, c: np.ndarray, max_iter: int = 100) -> np.ndarray:
    """Roots of z + 4a z^3 = c by safeguarded Newton on the bracket [min(0,c), max(0,c)]."""
    lo = np.minimum(0.0, c)
    hi = np.maximum(0.0, c)
    scale = np.cbrt(np.abs(c) / (4.0 * a))
    z = np.sign(c) * np.minimum(np.abs(c), scale)
    tol = np.maximum(RESIDUAL_TOLERANCE, 4.0 * EPS * np.abs(c))
    done = np.zeros(c.shape, dtype=bool)
    for _ in range(max_iter):
        resid = z + 4.0 * a * z**3 - c
        done = np.abs(resid) <= tol
        done |= (hi - lo) <= 2.0 * EPS * np.maximum(1.0, np.abs(z))
        if np.all(done):
            break
        hi = np.where(resid > 0, z, hi)
        lo = np.where(resid < 0, z, lo)
        newton = z - resid / (1.0 + 12.0 * a * z * z)
        inside = (newton > lo) & (newton < hi)
        z = np.where(done, z, np.where(inside, newton, 0.5 * (lo + hi)))
    if not np.all(done):
        raise ConvergenceError("cubic gradient inversion did not converge")
    return z


def _invert_unchecked(h: ReferenceFunction, c: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Invert h_i' at the coordinates idx; BurgLog entries must already satisfy c < 0."""
    kinds = h._kinds[idx]
    z = c.copy()
    burg = kinds == ComponentKind.BURG.value
    z[burg] = -1.0 / c[burg]
    quartic = kinds == ComponentKind.QUADRATIC_QUARTIC.value
    if np.any(quartic):
        z[quartic] = _solve_cubic(h._a[idx][quartic], c[quartic])
    return z


def invert_grad_coordinate(component: Component, c: float) -> float:
    """Return z with h_i'(z) = c for a single component."""
    c = float(c)
    if not np.isfinite(c):
        raise RangeError(f"gradient value {c} is not finite")
    if component.kind == ComponentKind.SQUARED_HALF:
        return c
    if component.kind == ComponentKind.BURG:
        if c >= 0:
            raise RangeError(f"BurgLog gradient range is (-inf, 0), got {c}")
        return -1.0 / c
    return float(_solve_cubic(np.array([component.a]), np.array([c]))[0])


# ============================================================================
# Mirror step
# ============================================================================


def _stepsizes(h: ReferenceFunction, L) -> np.ndarray:
    L = np.broadcast_to(np.asarray(L, dtype=float), (h.n,)).copy()
    if np.any(~(L > 0)) or np.any(~np.isfinite(L)):
        raise ValueError("stepsize parameters must be positive and finite")
    return L


def mirror_step_with_multiplier(
    h: ReferenceFunction,
    Q: FeasibleSet,
    x,
    g,
    L,
    coords: Sequence[int] | np.ndarray | None = None,
) -> tuple[np.ndarray, float]:
    """Exact minimizer of <g, z> + sum_i L_i D_{h_i}(z_i, x_i) over Q, moving only coords.

    Returns the minimizer and the multiplier of <1, z> = 1 (0.0 unless Q is a Simplex).
    """
    x = _as_vector(h, x)
    g = _as_vector(h, g)
    check_domain(h, x)
    L = _stepsizes(h, L)
    validate_geometry(h, Q)

    idx = np.arange(h.n) if coords is None else np.unique(np.asarray(coords, dtype=int))
    if idx.size and (idx[0] < 0 or idx[-1] >= h.n):
        raise DimensionMismatch(f"coordinate indices must lie in [0, {h.n})")
    z = x.copy()
    if idx.size == 0:
        return z, 0.0

    if isinstance(Q, Simplex):
        z_moving, lam = _simplex_solve(x[idx], g[idx], L[idx], 1.0 - (np.sum(x) - np.sum(x[idx])))
        z[idx] = z_moving
        return z, lam

    c = _grad_unchecked(h, x)[idx] - g[idx] / L[idx]
    burg = h._kinds[idx] == ComponentKind.BURG.value
    escaping = burg & ~(c < 0)

    upper = lower = None
    if isinstance(Q, Box):
        lower = np.asarray(Q.lower)[idx]
        upper = np.asarray(Q.upper)[idx]

    if np.any(escaping):
        # infimum at +inf: only a finite upper endpoint can hold it
        if upper is None or np.any(~np.isfinite(upper[escaping])):
            moved = idx[escaping].tolist()
            raise StepOutOfDomain(f"mirror step leaves the domain of h at coordinates {moved[:10]}", moved)

    z_moving = np.empty(idx.size)
    ok = ~escaping
    z_moving[ok] = _invert_unchecked(h, c[ok], idx[ok])
    if np.any(escaping):
        z_moving[escaping] = upper[escaping]

    if isinstance(Q, PositiveOrthant):
        z_moving = np.where(burg, z_moving, np.maximum(z_moving, 0.0))
    elif isinstance(Q, Box):
        z_moving = np.clip(z_moving, lower, upper)
        if np.any(burg & ~(z_moving > 0)):
            raise StepOutOfDomain("box clipping left a BurgLog coordinate at a nonpositive endpoint")
    z[idx] = z_moving
    return z, 0.0


def mirror_step(h: ReferenceFunction, Q: FeasibleSet, x, g, L, coords=None) -> np.ndarray:
    """Mirror step argmin_{z in Q} <g, z> + sum_i L_i D_{h_i}(z_i, x_i) over the moving coordinates."""
    z, _ = mirror_step_with_multiplier(h, Q, x, g, L, coords)
    return z


def _simplex_solve(x: np.ndarray, g: np.ndarray, L: np.ndarray, target: float) -> tuple[np.ndarray, float]:
    """Burg mirror step on {sum z = target}: z_i(lam) = 1 / (1/x_i + (g_i + lam)/L_i).

    The map lam -> sum z(lam) strictly decreases from +inf (at lam_min) to 0, so the
    root is bracketed above lam_min and found by bisection with Newton acceleration.
    """
    if not target > 0:
        raise DomainError(f"fixed coordinates leave no simplex mass to distribute ({target})")
    if x.size == 1:
        lam = float(L[0] / target - L[0] / x[0] - g[0])
        return np.array([target]), lam

    base = 1.0 / x + g / L
    lam_min = float(np.max(-L * base))

    def total(delta: float) -> tuple[float, float, np.ndarray]:
        denom = base + (lam_min + delta) / L
        zs = 1.0 / denom
        return float(np.sum(zs)) - target, float(-np.sum(zs * zs / L)), zs

    step = max(1.0, abs(lam_min))
    hi = step
    while total(hi)[0] > 0:
        hi *= 2.0
    lo = hi
    while total(lo)[0] < 0:
        lo *= 0.5

    delta = lo
    for _ in range(MAX_BISECTION_STEPS):
        resid, slope, zs = total(delta)
        if abs(resid) <= SIMPLEX_TOLERANCE * 0.5:
            return zs, lam_min + delta
        if resid > 0:
            lo = delta
        else:
            hi = delta
        newton = delta - resid / slope if slope < 0 else -1.0
        delta = newton if lo < newton < hi else 0.5 * (lo + hi)
        if hi - lo <= EPS * hi:
            break
    resid, _, zs = total(delta)
    if abs(resid) <= SIMPLEX_TOLERANCE:
        return zs, lam_min + delta
    raise ConvergenceError(f"simplex multiplier search stopped with residual {resid:.3e}")


# ============================================================================
# Symmetry measure
# ============================================================================


def symmetry_measure_estimate(
    h: ReferenceFunction,
    domain_sampler: Callable[[np.random.Generator], tuple[np.ndarray, np.ndarray]],
    n_samples: int,
    rng: np.random.Generator,
) -> float:
    """Minimum of D_h(x, y) / D_h(y, x) over sampled pairs.

    This is an upper bound on the symmetry measure alpha(h), not the infimum itself.
    Pure SquaredHalf geometry returns exactly 1.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if h.is_squared_half:
        return 1.0
    best = np.inf
    for _ in range(n_samples):
        x, y = domain_sampler(rng)
        back = bregman(h, y, x)
        if back <= 0:
            continue
        best = min(best, bregman(h, x, y) / back)
    if not np.isfinite(best):
        raise ValueError(f"all {n_samples} sampled pairs were coincident; no ratio to estimate")
    return float(best)
