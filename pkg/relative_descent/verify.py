"""
Numerical checks of the inequalities behind every certificate.

All checks are sampled. A failing report carries the offending sample as its
witness, so it reproduces from the same seed.
"""

from __future__ import annotations

import logging
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .bregman import (
    Box,
    ComponentKind,
    FeasibleSet,
    PositiveOrthant,
    ReferenceFunction,
    Simplex,
    coordinate_bregman,
    grad_h,
    in_domain,
    mirror_step,
    mirror_step_with_multiplier,
)
from .config import VerifySettings
from .errors import DimensionMismatch, DomainError
from .models import CheckReport
from .problems import EsoCertificate, Problem, stochastic_grad
from .sampling import draw, enumerate_subsets, make_rng

logger = logging.getLogger(__name__)

STATIONARITY_TOLERANCE = 1e-10
SIMPLEX_SUM_TOLERANCE = 1e-12
ORACLE_STANDARD_ERRORS = 4.0
ESO_STANDARD_ERRORS = 3.0


def _settings(settings: Optional[VerifySettings]) -> VerifySettings:
    return settings or VerifySettings()


def _report(
    name: str,
    slacks: np.ndarray,
    tolerances: np.ndarray,
    witness: Callable[[int], dict[str, list[float]]],
    detail: str = "",
) -> CheckReport:
    """Build a report from per-sample signed slacks; the worst sample is the one furthest below tolerance."""
    slacks = np.asarray(slacks, dtype=float)
    tolerances = np.broadcast_to(np.asarray(tolerances, dtype=float), slacks.shape)
    if slacks.size == 0:
        return CheckReport(name=name, n_samples=0, worst_slack=0.0, tolerance=0.0, passed=True, detail="no samples")
    scaled = np.where(np.isnan(slacks), -np.inf, slacks / tolerances)
    worst = int(np.argmin(scaled))
    passed = bool(scaled[worst] >= -1.0)
    report = CheckReport(
        name=name,
        n_samples=int(slacks.size),
        worst_slack=float(slacks[worst]),
        tolerance=float(tolerances[worst]),
        passed=passed,
        witness=None if passed else witness(worst),
        detail=detail,
    )
    log = logger.debug if passed else logger.warning
    log(f"{name}: {'pass' if passed else 'FAIL'} over {slacks.size} samples, worst slack {slacks[worst]:.3e}")
    return report


# ============================================================================
# Samplers
# ============================================================================


def _sample_points(
    h: ReferenceFunction, Q: FeasibleSet, count: int, rng: np.random.Generator, scale: float, s: VerifySettings
) -> np.ndarray:
    n = h.n
    burg = h.mask(ComponentKind.BURG)
    log_low, log_high = np.log(s.pair_log_low), np.log(s.pair_log_high)
    X = rng.normal(0.0, scale, (count, n))
    if isinstance(Q, Simplex):
        X = np.exp(rng.uniform(log_low, log_high, (count, n)))
        return X / X.sum(axis=1, keepdims=True)
    if np.any(burg):
        X[:, burg] = np.exp(rng.uniform(log_low, log_high, (count, int(burg.sum()))))
    if isinstance(Q, PositiveOrthant):
        X[:, ~burg] = np.abs(X[:, ~burg])
    elif isinstance(Q, Box):
        lower, upper = np.asarray(Q.lower), np.asarray(Q.upper)
        finite = np.isfinite(lower) & np.isfinite(upper)
        X[:, finite] = rng.uniform(lower[finite], upper[finite], (count, int(finite.sum())))
        X = np.clip(X, lower, upper)
        X[:, burg] = np.maximum(X[:, burg], np.minimum(upper[burg], s.pair_log_low))
    return X


def sample_pairs(
    p: Problem,
    n_pairs: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    scale: float = 1.0,
    settings: Optional[VerifySettings] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Problem-aware pairs (X[i], Y[i]) inside Q and dom h.

    BurgLog coordinates are log-uniform over [pair_log_low, pair_log_high],
    simplex points are normalized log-uniform draws, and unconstrained
    coordinates are normal with standard deviation ``scale``.
    """
    s = _settings(settings)
    n_pairs = n_pairs or s.n_pairs
    rng = rng if rng is not None else make_rng(0)
    X = _sample_points(p.h, p.Q, n_pairs, rng, scale, s)
    Y = _sample_points(p.h, p.Q, n_pairs, rng, scale, s)
    return X, Y


# ============================================================================
# Gradient oracle checks
# ============================================================================


def check_gradient_fd(
    p: Problem, points: Iterable, step: Optional[float] = None, settings: Optional[VerifySettings] = None
) -> CheckReport:
    """Central differences against the analytic gradient.

    Each coordinate uses the step ``step * max(1, |x_i|)``, kept inside dom h.
    The error at a point is max_i |fd_i - g_i| / max(|g|_inf, 1).
    """
    s = _settings(settings)
    step = step or s.fd_step
    if not step > 0:
        raise ValueError(f"finite-difference step must be positive, got {step}")
    points = [np.asarray(x, dtype=float) for x in points]
    burg = p.h.mask(ComponentKind.BURG)
    errors = np.empty(len(points))
    for j, x in enumerate(points):
        if x.shape != (p.n,):
            raise DimensionMismatch(f"point of shape {x.shape} for n={p.n}")
        g = p.gradient(x)
        fd = np.empty(p.n)
        for i in range(p.n):
            hstep = step * max(1.0, abs(x[i]))
            if burg[i]:
                hstep = min(hstep, 0.5 * x[i])
            e = np.zeros(p.n)
            e[i] = hstep
            fd[i] = (p.value(x + e) - p.value(x - e)) / (2.0 * hstep)
        errors[j] = np.max(np.abs(fd - g)) / max(float(np.max(np.abs(g))), 1.0)
    return _report(
        "gradient_fd",
        s.fd_tolerance - errors,
        np.full(errors.shape, s.fd_tolerance),
        lambda i: {"x": points[i].tolist(), "relative_error": [float(errors[i])]},
        detail=f"max relative error {errors.max() if errors.size else 0.0:.3e} at step {step:g}",
    )


def check_unbiased_oracle(
    p: Problem,
    x,
    n_draws: int = 2000,
    rng: Optional[np.random.Generator] = None,
    tau: int = 1,
) -> CheckReport:
    """Mean of oracle draws against grad f(x), per coordinate within 4 standard errors.

    Finite sums with ``component_gradient`` are also checked exactly: the
    average of all m outcomes must equal the gradient.
    """
    rng = rng if rng is not None else make_rng(0)
    x = np.asarray(x, dtype=float)
    g = p.gradient(x)
    scale = max(1.0, float(np.max(np.abs(g))))
    if hasattr(p, "component_gradient"):
        exact = np.mean([p.component_gradient(x, i) for i in range(p.n_components)], axis=0)
        error = float(np.max(np.abs(exact - g)))
        if error > 1e-10 * scale:
            return _report(
                "unbiased_oracle",
                np.array([-error]),
                np.array([1e-10 * scale]),
                lambda _: {"x": x.tolist(), "mean": exact.tolist(), "gradient": g.tolist()},
                detail="exact average over components differs from the gradient",
            )
    draws = np.stack([stochastic_grad(p, x, tau, rng) for _ in range(n_draws)])
    mean = draws.mean(axis=0)
    se = draws.std(axis=0, ddof=1) / np.sqrt(n_draws)
    slack = ORACLE_STANDARD_ERRORS * se + 1e-12 * scale - np.abs(mean - g)
    return _report(
        "unbiased_oracle",
        slack,
        np.full(slack.shape, 1e-12 * scale),
        lambda i: {"x": x.tolist(), "coordinate": [float(i)], "mean": [float(mean[i])], "gradient": [float(g[i])]},
        detail=f"{n_draws} draws of minibatch {tau}",
    )


# ============================================================================
# Relative smoothness and strong convexity
# ============================================================================


def _pairs(p: Problem, n_pairs, rng, pairs, s: VerifySettings, scale: float):
    if pairs is not None:
        X, Y = (np.atleast_2d(np.asarray(a, dtype=float)) for a in pairs)
    else:
        X, Y = sample_pairs(p, n_pairs or s.n_pairs, rng, scale, s)
    if X.shape != Y.shape or X.shape[1] != p.n:
        raise DimensionMismatch("pair arrays must both have shape (count, n)")
    for row in (*X, *Y):
        if not in_domain(p.h, p.Q, row):
            raise DomainError("sampled pair leaves Q or dom h")
    return X, Y


def check_relative_smoothness(
    p: Problem,
    L: Optional[float] = None,
    n_pairs: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    *,
    pairs: Optional[tuple[np.ndarray, np.ndarray]] = None,
    scale: float = 1.0,
    settings: Optional[VerifySettings] = None,
) -> CheckReport:
    """f(x) <= f(y) + <grad f(y), x - y> + L D_h(x, y) on sampled pairs."""
    s = _settings(settings)
    L = p.L if L is None else float(L)
    X, Y = _pairs(p, n_pairs, rng, pairs, s, scale)
    slacks = np.empty(len(X))
    tolerances = np.empty(len(X))
    for i, (x, y) in enumerate(zip(X, Y)):
        fy = p.value(y)
        rhs = fy + p.gradient(y) @ (x - y) + L * float(np.sum(coordinate_bregman(p.h, x, y)))
        slacks[i] = rhs - p.value(x)
        tolerances[i] = s.slack_tolerance * (1.0 + abs(fy))
    return _report(
        "relative_smoothness",
        slacks,
        tolerances,
        lambda i: {"x": X[i].tolist(), "y": Y[i].tolist()},
        detail=f"L = {L:.6g}",
    )


def check_relative_strong_convexity(
    p: Problem,
    mu=None,
    n_pairs: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    *,
    pairs: Optional[tuple[np.ndarray, np.ndarray]] = None,
    scale: float = 1.0,
    settings: Optional[VerifySettings] = None,
) -> CheckReport:
    """f(y) >= f(x) + <grad f(x), y - x> + sum_i w_i D_{h_i}(y_i, x_i).

    ``mu`` is a scalar or a per-coordinate vector w; it defaults to the
    problem's w. mu = 0 is a plain convexity check.
    """
    s = _settings(settings)
    w = p.w if mu is None else np.broadcast_to(np.asarray(mu, dtype=float), (p.n,))
    if np.any(w < 0):
        raise ValueError("strong-convexity weights must be nonnegative")
    X, Y = _pairs(p, n_pairs, rng, pairs, s, scale)
    slacks = np.empty(len(X))
    tolerances = np.empty(len(X))
    for i, (x, y) in enumerate(zip(X, Y)):
        fx = p.value(x)
        lower = fx + p.gradient(x) @ (y - x) + float(np.dot(w, coordinate_bregman(p.h, y, x)))
        slacks[i] = p.value(y) - lower
        tolerances[i] = s.slack_tolerance * (1.0 + abs(fx))
    return _report(
        "relative_strong_convexity",
        slacks,
        tolerances,
        lambda i: {"x": X[i].tolist(), "y": Y[i].tolist()},
        detail=f"min w = {float(np.min(w)):.6g}",
    )


# ============================================================================
# ESO
# ============================================================================


def check_eso(
    p: Problem,
    cert: EsoCertificate,
    x,
    q,
    n_mc: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    settings: Optional[VerifySettings] = None,
) -> CheckReport:
    """E f(x + sum_{i in S} q_i e_i) <= f(x) + <grad f(x), q>_p + D_h(x + q, x)_{p v}.

    The expectation is exact when the sampling has at most ``enumeration_limit``
    outcomes; otherwise it is a Monte-Carlo mean allowed a 3 standard-error margin.
    """
    s = _settings(settings)
    x = np.asarray(x, dtype=float)
    q = np.asarray(q, dtype=float)
    if x.shape != (p.n,) or q.shape != (p.n,):
        raise DimensionMismatch("x and q must have the problem dimension")
    for point in (x, x + q):
        if not in_domain(p.h, p.Q, point):
            raise DomainError("x and x + q must lie in Q and dom h")
    sampling = cert.sampling
    prob = sampling.p0
    fx = p.value(x)
    rhs = fx + prob * float(p.gradient(x) @ q) + prob * float(np.dot(cert.v, coordinate_bregman(p.h, x + q, x)))

    def moved(subset: np.ndarray) -> float:
        z = x.copy()
        z[subset] += q[subset]
        return p.value(z)

    if sampling.support_size <= s.enumeration_limit:
        lhs = float(np.mean([moved(subset) for subset in enumerate_subsets(sampling)]))
        margin, how = 0.0, f"exact over {sampling.support_size} subsets"
        count = sampling.support_size
    else:
        rng = rng if rng is not None else make_rng(0)
        count = n_mc or s.n_mc
        values = np.array([moved(draw(sampling, rng)) for _ in range(count)])
        lhs = float(values.mean())
        margin = ESO_STANDARD_ERRORS * float(values.std(ddof=1)) / np.sqrt(count)
        how = f"Monte Carlo over {count} draws, margin {margin:.3e}"
    slack = rhs + margin - lhs
    return _report(
        "eso",
        np.array([slack]),
        np.array([s.slack_tolerance * (1.0 + abs(fx))]),
        lambda _: {"x": x.tolist(), "q": q.tolist(), "lhs_rhs": [lhs, rhs]},
        detail=f"{sampling.label}, rule {cert.rule}, {how}",
    ).model_copy(update={"n_samples": int(count)})


# ============================================================================
# Mirror-step optimality
# ============================================================================


def check_three_point(
    h: ReferenceFunction,
    Q: FeasibleSet,
    z,
    c,
    test_points: Sequence,
    v=None,
    settings: Optional[VerifySettings] = None,
) -> CheckReport:
    """<c, x> + D(x, z) >= <c, z+> + D(z+, z) + D(x, z+) with z+ the mirror step from z.

    D is the plain Bregman distance, or the v-weighted one when v is given.
    """
    s = _settings(settings)
    z = np.asarray(z, dtype=float)
    c = np.asarray(c, dtype=float)
    weights = np.ones(h.n) if v is None else np.broadcast_to(np.asarray(v, dtype=float), (h.n,))
    z_plus = mirror_step(h, Q, z, c, weights)

    def distance(a, b) -> float:
        return float(np.dot(weights, coordinate_bregman(h, a, b)))

    base = float(c @ z_plus) + distance(z_plus, z)
    points = [np.asarray(x, dtype=float) for x in test_points]
    slacks = np.empty(len(points))
    tolerances = np.empty(len(points))
    for i, x in enumerate(points):
        if not in_domain(h, Q, x):
            raise DomainError("three-point test points must lie in Q and dom h")
        lhs = float(c @ x) + distance(x, z)
        slacks[i] = lhs - base - distance(x, z_plus)
        tolerances[i] = s.slack_tolerance * (1.0 + abs(lhs))
    return _report(
        "three_point" if v is None else "three_point_weighted",
        slacks,
        tolerances,
        lambda i: {"x": points[i].tolist(), "z": z.tolist(), "c": c.tolist()},
    )


def check_stationarity(h: ReferenceFunction, Q: FeasibleSet, x, g, L, coords=None) -> CheckReport:
    """Optimality conditions of the mirror step, scaled by L max(1, |grad h(x) - g/L|).

    Interior coordinates need a zero residual g + L (grad h(z) - grad h(x)) + lambda;
    coordinates at a lower (upper) bound need it nonnegative (nonpositive).
    Simplex steps must also sum to one within 1e-12.
    """
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    z, lam = mirror_step_with_multiplier(h, Q, x, g, L, coords)
    Lv = np.broadcast_to(np.asarray(L, dtype=float), (h.n,))
    idx = np.arange(h.n) if coords is None else np.unique(np.asarray(coords, dtype=int))
    target = grad_h(h, x) - g / Lv
    residual = (g + Lv * (grad_h(h, z) - grad_h(h, x)) + lam)[idx]
    scale = (Lv * np.maximum(1.0, np.abs(target)) + abs(lam))[idx]
    violation = np.abs(residual) / scale
    if isinstance(Q, (PositiveOrthant, Box)):
        if isinstance(Q, Box):
            lower, upper = np.asarray(Q.lower)[idx], np.asarray(Q.upper)[idx]
        else:
            lower, upper = np.zeros(idx.size), np.full(idx.size, np.inf)
        zi = z[idx]
        at_lower = zi <= lower
        at_upper = zi >= upper
        violation = np.where(at_lower, np.maximum(0.0, -residual) / scale, violation)
        violation = np.where(at_upper, np.maximum(0.0, residual) / scale, violation)
    slacks = -violation
    tolerances = np.full(slacks.shape, STATIONARITY_TOLERANCE)
    detail = f"multiplier {lam:.6g}"
    if isinstance(Q, Simplex):
        drift = abs(float(np.sum(z)) - 1.0)
        detail += f", |sum z - 1| = {drift:.3e}"
        slacks = np.append(slacks, -drift)
        tolerances = np.append(tolerances, SIMPLEX_SUM_TOLERANCE)
    return _report(
        "stationarity",
        slacks,
        tolerances,
        lambda _: {"x": x.tolist(), "g": g.tolist(), "z": z.tolist()},
        detail=detail,
    )


# ============================================================================
# Suite
# ============================================================================


def run_suite(
    p: Problem,
    x0=None,
    rng: Optional[np.random.Generator] = None,
    *,
    L: Optional[float] = None,
    certificates: Sequence[EsoCertificate] = (),
    n_pairs: Optional[int] = None,
    scale: float = 1.0,
    settings: Optional[VerifySettings] = None,
) -> list[CheckReport]:
    """Every applicable check at the problem's certificates (L overridable)."""
    s = _settings(settings)
    rng = rng if rng is not None else make_rng(0)
    n_pairs = n_pairs or s.n_pairs
    X, Y = sample_pairs(p, n_pairs, rng, scale, s)
    reports = [
        check_gradient_fd(p, X[: min(10, len(X))], settings=s),
        check_relative_smoothness(p, L, pairs=(X, Y), settings=s),
        check_relative_strong_convexity(p, pairs=(X, Y), settings=s),
    ]
    c = p.gradient(X[0]) / p.L
    reports.append(check_three_point(p.h, p.Q, X[0], c, Y[: min(100, len(Y))], settings=s))
    for cert in certificates:
        if isinstance(p.Q, Simplex):
            logger.info("ESO check skipped: coordinate moves leave the simplex")
            continue
        for x, y in zip(X[:5], Y[:5]):
            reports.append(check_eso(p, cert, x, y - x, rng=rng, settings=s))
    if p.has_stochastic_oracle:
        point = X[0] if x0 is None else np.asarray(x0, dtype=float)
        reports.append(check_unbiased_oracle(p, point, n_draws=s.n_mc, rng=rng))
    failed = [r.name for r in reports if not r.passed]
    if failed:
        logger.warning(f"{len(failed)} of {len(reports)} checks failed: {sorted(set(failed))}")
    else:
        logger.info(f"all {len(reports)} checks passed")
    return reports
