"""
Convergence bounds and auxiliary sequences.

Every evaluator returns a BoundReport echoing its inputs. Geometric factors
raised to the k-th power are handled as k * log(factor) so bounds stay finite
well beyond k = 10^4.
"""

from __future__ import annotations

import logging
import math
from typing import Optional, Protocol, Sequence, Union

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import InvalidCertificate, InvalidParams
from .models import BoundReport, CheckReport, WeightSequence

logger = logging.getLogger(__name__)

GAMMA_MAX_STEPS = 1_000_000
GAUTSCHI_TOLERANCE = 1e-12


class Schedule(Protocol):
    def values(self, k: int) -> np.ndarray: ...


ScheduleLike = Union[Schedule, Sequence[float], np.ndarray]


# ============================================================================
# Validation helpers
# ============================================================================


def _check_iterations(k) -> int:
    if int(k) != k or k < 1:
        raise InvalidParams(f"iteration count must be a positive integer, got {k}")
    return int(k)


def _check_nonnegative(**values: float) -> None:
    for name, value in values.items():
        if not (value >= 0 and math.isfinite(value)):
            raise InvalidParams(f"{name} must be finite and nonnegative, got {value}")


def _check_smoothness(L: float, mu: float) -> None:
    if not L > 0:
        raise InvalidParams(f"L must be positive, got {L}")
    if mu < 0:
        raise InvalidParams(f"mu must be nonnegative, got {mu}")
    if mu >= L:
        raise InvalidParams(f"need mu < L, got mu={mu}, L={L}")


def _weights(log_c: np.ndarray) -> WeightSequence:
    log_c = np.asarray(log_c, dtype=float)
    log_total = float(logsumexp(log_c))
    return WeightSequence(log_c, log_total, np.exp(log_c - log_total))


def _geometric_power(k: int, decrement: float) -> float:
    """(1 - decrement)^k evaluated as exp(k log1p(-decrement))."""
    if decrement >= 1.0:
        return 0.0
    return float(np.exp(k * np.log1p(-decrement)))


# ============================================================================
# relGD
# ============================================================================


def bound_relgd(L: float, mu: float, D0: float, k: int) -> BoundReport:
    """Deterministic rate of relative gradient descent.

    Returns the tight bound mu D0 / ((1 + mu/(L - mu))^k - 1), whose mu -> 0
    limit is L D0 / k, and the simpler (L - mu) D0 / k under ``terms``.
    """
    if mu >= L:
        raise InvalidCertificate(f"relative strong convexity {mu} must stay below smoothness {L}")
    _check_smoothness(L, mu)
    _check_nonnegative(D0=D0)
    k = _check_iterations(k)
    simple = (L - mu) * D0 / k
    if mu == 0:
        tight = L * D0 / k
    else:
        tight = float(mu * D0 / np.expm1(k * np.log1p(mu / (L - mu))))
    return BoundReport(
        name="relgd",
        quantity="suboptimality",
        value=tight,
        terms={"tight": tight, "simple": simple},
        inputs={"L": L, "mu": mu, "D0": D0, "k": k},
    )


def bound_relgd_grid(L: float, mu: float, D0: float, ks) -> np.ndarray:
    ks = np.asarray(ks, dtype=float)
    if np.any(ks < 1):
        raise InvalidParams("iteration grid must start at k = 1")
    if mu >= L:
        raise InvalidCertificate(f"relative strong convexity {mu} must stay below smoothness {L}")
    _check_smoothness(L, mu)
    if mu == 0:
        return L * D0 / ks
    with np.errstate(over="ignore"):
        return mu * D0 / np.expm1(ks * np.log1p(mu / (L - mu)))


# ============================================================================
# Rate weights and coordinate descent
# ============================================================================


def _rate_parameters(delta: float, phi: float, psi: float) -> None:
    if not 0 < delta <= 1:
        raise InvalidParams(f"delta must lie in (0, 1], got {delta}")
    if not psi > 0:
        raise InvalidParams(f"psi must be positive, got {psi}")
    if phi < psi:
        raise InvalidParams(f"need phi >= psi, got phi={phi}, psi={psi}")


def _rate_head(delta: float, phi: float, psi: float, count: int) -> tuple[np.ndarray, float]:
    """log C_t for t = 1..count (the t < k form) and log r with r = phi/(phi - delta psi)."""
    log_r = math.log(phi) - math.log(phi - delta * psi)
    if phi == psi:
        return np.full(count, -np.inf), log_r
    scale = math.log(phi - psi) - math.log(phi / delta - psi)
    return np.arange(count) * log_r + scale, log_r


def rate_weights(delta: float, phi: float, psi: float, k: int) -> WeightSequence:
    """Weights C_t = r^(t-1) (phi - psi)/(phi/delta - psi) for t < k and C_k = r^(k-1).

    In the degenerate case delta = 1, phi = psi (r infinite) all weight sits on
    t = k and the unnormalized sum is infinite for k > 1.
    """
    _rate_parameters(delta, phi, psi)
    k = _check_iterations(k)
    if delta == 1 and phi == psi:
        log_c = np.full(k, -np.inf)
        log_c[-1] = 0.0 if k == 1 else np.inf
        normalized = np.zeros(k)
        normalized[-1] = 1.0
        return WeightSequence(log_c, 0.0 if k == 1 else np.inf, normalized)
    head, log_r = _rate_head(delta, phi, psi, k - 1)
    return _weights(np.append(head, (k - 1) * log_r))


def rate_weights_total(delta: float, phi: float, psi: float, k: int) -> float:
    """Closed form of sum C_t: 1 - phi/psi + (phi/psi) r^(k-1)."""
    _rate_parameters(delta, phi, psi)
    k = _check_iterations(k)
    if delta == 1 and phi == psi:
        return 1.0 if k == 1 else math.inf
    q = phi / psi
    log_r = math.log(phi) - math.log(phi - delta * psi)
    with np.errstate(over="ignore"):
        return float(1.0 - q + q * np.exp((k - 1) * log_r))


def _rate_log_totals(delta: float, phi: float, psi: float, ks: np.ndarray) -> np.ndarray:
    """log sum_t C_t for every k in ks, sharing one cumulative head."""
    top = int(ks.max())
    head, log_r = _rate_head(delta, phi, psi, max(top - 1, 1))
    cumulative = np.logaddexp.accumulate(head)
    out = np.zeros(ks.shape)
    for i, k in enumerate(ks.astype(int)):
        out[i] = 0.0 if k == 1 else np.logaddexp(cumulative[k - 2], (k - 1) * log_r)
    return out


def _uniform_then_last(delta: float, k: int) -> WeightSequence:
    """Weights proportional to (delta, ..., delta, 1)."""
    log_c = np.full(k, math.log(delta))
    log_c[-1] = 0.0
    return _weights(log_c)


def bound_relrcds(L: float, mu: float, tau: int, n: int, D0: float, gap: float, k: int) -> BoundReport:
    """Weighted expected suboptimality of relRCDs with tau-nice sampling."""
    _check_smoothness(L, mu)
    if not 1 <= tau <= n:
        raise InvalidParams(f"tau must lie in [1, n={n}], got {tau}")
    _check_nonnegative(D0=D0, gap=gap)
    k = _check_iterations(k)
    delta = tau / n
    inputs = {"L": L, "mu": mu, "tau": tau, "n": n, "D0": D0, "gap": gap, "k": k}
    if mu == 0:
        denominator = 1.0 + delta * (k - 1)
        value = (L * D0 + (1.0 - delta) * gap) / denominator
        return BoundReport(
            name="relrcds",
            quantity="weighted_suboptimality",
            value=value,
            terms={"denominator": denominator},
            inputs=inputs,
            weights=_uniform_then_last(delta, k),
        )
    weights = rate_weights(delta, L, mu, k)
    numerator = (L - delta * mu) * D0 + (1.0 - delta) * gap
    value = float(numerator * np.exp(-weights.log_total))
    return BoundReport(
        name="relrcds",
        quantity="weighted_suboptimality",
        value=value,
        terms={"numerator": numerator, "log_denominator": weights.log_total},
        inputs=inputs,
        weights=weights,
    )


def bound_relrcds_grid(L: float, mu: float, tau: int, n: int, D0: float, gap: float, ks) -> np.ndarray:
    _check_smoothness(L, mu)
    ks = np.asarray(ks)
    delta = tau / n
    if mu == 0:
        return (L * D0 + (1.0 - delta) * gap) / (1.0 + delta * (ks - 1))
    numerator = (L - delta * mu) * D0 + (1.0 - delta) * gap
    return numerator * np.exp(-_rate_log_totals(delta, L, mu, ks))


def bound_relrcds_symmetry(
    L: float, mu: float, tau: int, n: int, alpha_h: float, Z0: float, k: int
) -> BoundReport:
    """Contraction of the Lyapunov function Z = L D_h(x*, x) + f(x) - f* using the symmetry measure."""
    _check_smoothness(L, mu)
    if not 0 <= alpha_h <= 1:
        raise InvalidParams(f"symmetry measure must lie in [0, 1], got {alpha_h}")
    if not 1 <= tau <= n:
        raise InvalidParams(f"tau must lie in [1, n={n}], got {tau}")
    _check_nonnegative(Z0=Z0)
    k = _check_iterations(k)
    delta = tau / n
    inputs = {"L": L, "mu": mu, "tau": tau, "n": n, "alpha_h": alpha_h, "Z0": Z0, "k": k}
    if mu == 0:
        return BoundReport(
            name="relrcds_symmetry",
            quantity="suboptimality",
            value=Z0 / (1.0 + delta * k),
            terms={"factor": 1.0},
            inputs=inputs,
        )
    decrement = delta * mu / L + delta * (1.0 - mu / L) * mu * alpha_h / (mu * alpha_h + L)
    return BoundReport(
        name="relrcds_symmetry",
        quantity="lyapunov",
        value=_geometric_power(k, decrement) * Z0,
        terms={"factor": 1.0 - decrement},
        inputs=inputs,
    )


def bound_relrcd_eso(v, w, p0: float, D0_v: float, gap: float, k: int) -> BoundReport:
    """Bounds for relRCD under an ESO with vector v and strong-convexity vector w.

    ``value`` is the weighted expected suboptimality; ``terms`` carries
    Delta = min w_i / v_i, the weighted Bregman bound (1 - p0 Delta)^k D0_v and
    the gradient-surrogate bound gap / (k p0). Delta = 0 gives the non-strongly
    convex rate. D0_v is the v-weighted distance D_h(x*, x0)_v.
    """
    v = np.asarray(v, dtype=float)
    w = np.zeros_like(v) if w is None else np.asarray(w, dtype=float)
    if v.ndim != 1 or w.shape != v.shape:
        raise InvalidParams(f"v and w must be vectors of equal length, got {v.shape} and {w.shape}")
    if np.any(~(v > 0)) or np.any(w < 0):
        raise InvalidParams("v must be positive and w nonnegative")
    if not 0 < p0 <= 1:
        raise InvalidParams(f"p0 must lie in (0, 1], got {p0}")
    _check_nonnegative(D0_v=D0_v, gap=gap)
    k = _check_iterations(k)
    Delta = float(np.min(w / v))
    if Delta > 1:
        raise InvalidParams(f"min w/v = {Delta} exceeds 1: w cannot dominate the ESO vector")
    inputs = {"p0": p0, "Delta": Delta, "D0_v": D0_v, "gap": gap, "k": k}
    surrogate = gap / (k * p0)

    if Delta == 0:
        denominator = 1.0 + p0 * (k - 1)
        return BoundReport(
            name="relrcd_eso",
            quantity="weighted_suboptimality",
            value=(D0_v + (1.0 - p0) * gap) / denominator,
            terms={"Delta": 0.0, "bregman": D0_v, "gradient_surrogate": surrogate},
            inputs=inputs,
            weights=_uniform_then_last(p0, k),
            notes=["Delta = 0: non-strongly convex rate"],
        )

    weights = rate_weights(p0, 1.0, Delta, k)
    numerator = (1.0 - p0 * Delta) * D0_v + (1.0 - p0) * gap
    value = 0.0 if numerator == 0 else float(numerator * np.exp(-weights.log_total))
    return BoundReport(
        name="relrcd_eso",
        quantity="weighted_suboptimality",
        value=value,
        terms={
            "Delta": Delta,
            "bregman": _geometric_power(k, p0 * Delta) * D0_v,
            "gradient_surrogate": surrogate,
        },
        inputs=inputs,
        weights=weights,
    )


def bound_relrcd_eso_grid(Delta: float, p0: float, D0_v: float, gap: float, ks) -> dict[str, np.ndarray]:
    """Per-k weighted-suboptimality and Bregman bounds for overlays."""
    ks = np.asarray(ks)
    if Delta == 0:
        weighted = (D0_v + (1.0 - p0) * gap) / (1.0 + p0 * (ks - 1))
        bregman = np.full(ks.shape, D0_v, dtype=float)
    else:
        numerator = (1.0 - p0 * Delta) * D0_v + (1.0 - p0) * gap
        if p0 * Delta >= 1:
            weighted = np.where(ks == 1, numerator, 0.0)
            bregman = np.zeros(ks.shape)
        else:
            weighted = numerator * np.exp(-_rate_log_totals(p0, 1.0, Delta, ks))
            bregman = np.exp(ks * np.log1p(-p0 * Delta)) * D0_v
    return {"weighted": weighted, "bregman": bregman, "gradient_surrogate": gap / (ks * p0)}


def iteration_complexity_eso(
    p0: float, Delta: float, epsilon: float, D0_v: float, gap: Optional[float] = None
) -> BoundReport:
    """Iterations relRCD needs for epsilon accuracy, under two readings of the prefactor.

    ``value`` follows the rate (1 - p0 Delta)^k, i.e. log(D0_v / eps) / (p0 Delta).
    ``terms["distance_delta_over_p0"]`` uses the Delta / p0 prefactor instead. With a
    known gap the function-value counts are added the same two ways.
    """
    if not 0 < p0 <= 1 or not 0 < Delta <= 1:
        raise InvalidParams(f"need p0 in (0, 1] and Delta in (0, 1], got p0={p0}, Delta={Delta}")
    if not epsilon > 0 or not D0_v > 0:
        raise InvalidParams("epsilon and D0_v must be positive")
    log_ratio = math.log(D0_v / epsilon)
    rate = p0 * Delta
    terms = {
        "distance_rate": log_ratio / rate,
        "distance_delta_over_p0": (Delta / p0) * log_ratio,
    }
    if rate < 1:
        terms["distance_exact"] = float(math.ceil(max(log_ratio, 0.0) / -math.log1p(-rate)))
    if gap is not None:
        _check_nonnegative(gap=gap)
        numerator = (1.0 - rate) * D0_v + (1.0 - p0) * gap
        argument = numerator / epsilon + 1.0 / Delta - 1.0
        if rate < 1:
            terms["function_rate"] = 1.0 + math.log(max(Delta * argument, 1.0)) / -math.log1p(-rate)
        terms["function_delta_over_p0"] = (Delta / p0) * math.log(Delta) * math.log(argument)
    return BoundReport(
        name="iteration_complexity_eso",
        quantity="iterations",
        value=terms["distance_rate"],
        terms=terms,
        inputs={"p0": p0, "Delta": Delta, "epsilon": epsilon, "D0_v": D0_v, "gap": gap},
        notes=["delta_over_p0 terms use the Delta / p0 prefactor"],
    )


# ============================================================================
# relSGD
# ============================================================================


def _schedule_values(schedule: ScheduleLike, k: int) -> np.ndarray:
    if hasattr(schedule, "values") and callable(schedule.values):
        values = np.asarray(schedule.values(k), dtype=float)
    else:
        values = np.asarray(schedule, dtype=float)[:k]
    if values.shape != (k,):
        raise InvalidParams(f"schedule yields {values.shape[0]} values, need {k}")
    return values


def _sgd_log_weights(L_t: np.ndarray, mu: float) -> np.ndarray:
    if np.any(~(L_t > mu)):
        bad = int(np.flatnonzero(~(L_t > mu))[0])
        raise InvalidParams(f"stepsize parameter L_{bad} = {L_t[bad]} must exceed mu = {mu}")
    steps = np.log(L_t[:-1]) - np.log(L_t[1:] - mu)
    return np.concatenate(([0.0], np.cumsum(steps)))


def sgd_weights(schedule: ScheduleLike, mu: float, k: int) -> WeightSequence:
    """c_0 = 1, c_t = L_{t-1} / (L_t - mu) c_{t-1} for t < k; C_k is their sum."""
    k = _check_iterations(k)
    _check_nonnegative(mu=mu)
    return _weights(_sgd_log_weights(_schedule_values(schedule, k), mu))


def _warn_schedule(L_t: np.ndarray, L: float) -> None:
    if not math.isclose(L_t[0], L, rel_tol=1e-12):
        logger.warning(f"schedule starts at L_0 = {L_t[0]:.6g}, the bound assumes L_0 = L = {L:.6g}")
    if np.min(L_t) < L * (1 - 1e-12):
        logger.warning(f"schedule dips to {np.min(L_t):.6g} below L = {L:.6g}; the bound is not guaranteed")


def bound_relsgd_general(
    schedule: ScheduleLike, L: float, mu: float, sigma2: float, D0: float, k: int
) -> BoundReport:
    """(L - mu) D0 / C_k + sigma^2 sum_t c_t / (C_k L_t), summed directly."""
    _check_smoothness(L, mu)
    _check_nonnegative(sigma2=sigma2, D0=D0)
    k = _check_iterations(k)
    L_t = _schedule_values(schedule, k)
    _warn_schedule(L_t, L)
    log_c = _sgd_log_weights(L_t, mu)
    weights = _weights(log_c)
    deterministic = float((L - mu) * D0 * np.exp(-weights.log_total))
    noise_sum = float(np.exp(logsumexp(log_c - np.log(L_t)) - weights.log_total))
    return BoundReport(
        name="relsgd",
        quantity="weighted_suboptimality",
        value=deterministic + sigma2 * noise_sum,
        terms={"deterministic": deterministic, "noise": sigma2 * noise_sum, "noise_sum": noise_sum},
        inputs={"L": L, "mu": mu, "sigma2": sigma2, "D0": D0, "k": k},
        weights=weights,
    )


def bound_relsgd_grid(schedule: ScheduleLike, L: float, mu: float, sigma2: float, D0: float, ks) -> np.ndarray:
    """bound_relsgd_general at every k in ks from a single pass over the schedule."""
    _check_smoothness(L, mu)
    ks = np.asarray(ks, dtype=int)
    top = int(ks.max())
    L_t = _schedule_values(schedule, top)
    log_c = _sgd_log_weights(L_t, mu)
    log_C = np.logaddexp.accumulate(log_c)
    log_noise = np.logaddexp.accumulate(log_c - np.log(L_t))
    idx = ks - 1
    return (L - mu) * D0 * np.exp(-log_C[idx]) + sigma2 * np.exp(log_noise[idx] - log_C[idx])


def bound_relsgd_minibatch(
    schedule: ScheduleLike, L: float, mu: float, sigma2: float, tau: int, D0: float, k: int
) -> BoundReport:
    if int(tau) != tau or tau < 1:
        raise InvalidParams(f"minibatch size must be a positive integer, got {tau}")
    report = bound_relsgd_general(schedule, L, mu, sigma2 / tau, D0, k)
    report.name = "relsgd_minibatch"
    report.inputs.update({"sigma2": sigma2, "tau": tau})
    return report


def bound_relsgd_constant(L: float, mu: float, sigma2: float, D0: float, k: int) -> BoundReport:
    """Constant L_t = L: the relGD rate plus a sigma^2 / L neighbourhood of f*."""
    _check_nonnegative(sigma2=sigma2)
    deterministic = bound_relgd(L, mu, D0, k).value
    return BoundReport(
        name="relsgd_constant",
        quantity="weighted_suboptimality",
        value=deterministic + sigma2 / L,
        terms={"deterministic": deterministic, "neighbourhood": sigma2 / L},
        inputs={"L": L, "mu": mu, "sigma2": sigma2, "D0": D0, "k": k},
    )


def bound_relsgd_linear_mu_half(L: float, mu: float, sigma2: float, D0: float, k: int) -> BoundReport:
    """Closed form for L_t = L + t mu / 2.

    It bounds the directly summed bound from above: its denominator drops a
    (mu/2)^2 (k - 1) term and its noise numerator rounds each ratio up to one.
    """
    _check_smoothness(L, mu)
    if mu == 0:
        raise InvalidParams("the mu/2 schedule needs mu > 0")
    _check_nonnegative(sigma2=sigma2, D0=D0)
    k = _check_iterations(k)
    numerator = (L - mu) * (L - mu / 2) * mu * D0 + sigma2 * mu * (1 - mu / (2 * L) + k)
    denominator = (L + (k - 2) * mu / 2) ** 2 - (L - mu / 2) ** 2 + (L - mu / 2) * mu
    return BoundReport(
        name="relsgd_linear_mu_half",
        quantity="weighted_suboptimality",
        value=numerator / denominator,
        terms={"numerator": numerator, "denominator": denominator},
        inputs={"L": L, "mu": mu, "sigma2": sigma2, "D0": D0, "k": k},
    )


def optimal_constant_stepsize(sigma2: float, L: float, D0: float, k: int, mu: float = 0.0) -> float:
    """The constant L_t balancing the two terms of the relSGD bound over a fixed horizon k.

    sigma^2 L (k-1) / (-sigma^2 + sqrt(sigma^4 + sigma^2 A L (k-1))) with
    A = (L - mu) D0 + sigma^2 L, rewritten as (sigma^2 + sqrt(...)) / A to
    avoid cancellation. 1/L_t is the positive root of
    sigma^2 L (k-1) l^2 + 2 sigma^2 l - A = 0.
    """
    if not sigma2 > 0:
        raise InvalidParams("sigma^2 must be positive; use a constant L schedule for noiseless oracles")
    _check_smoothness(L, mu)
    _check_nonnegative(D0=D0)
    k = _check_iterations(k)
    if k < 2:
        raise InvalidParams("the fixed-horizon stepsize needs k >= 2")
    A = (L - mu) * D0 + sigma2 * L
    X = sigma2 * A * L * (k - 1)
    return float((sigma2 + math.sqrt(sigma2 * sigma2 + X)) / A)


# ============================================================================
# Generalized Gamma function
# ============================================================================


def _log_gamma_recursive(alpha: float, x: float) -> float:
    """Step-wise construction: zero on [1, 1 + alpha), extended by the functional equation."""
    if x >= 1:
        j = int(math.floor((x - 1) / alpha))
        base = x - j * alpha
        while base >= 1 + alpha:
            j, base = j + 1, base - alpha
        while base < 1 and j > 0:
            j, base = j - 1, base + alpha
        if j > GAMMA_MAX_STEPS:
            raise InvalidParams(f"gamma_alpha recursion needs {j} steps (cap {GAMMA_MAX_STEPS})")
        return math.fsum(math.log(base + i * alpha) for i in range(j))
    j = int(math.ceil((1 - x) / alpha))
    while x + j * alpha < 1:
        j += 1
    if j > GAMMA_MAX_STEPS:
        raise InvalidParams(f"gamma_alpha recursion needs {j} steps (cap {GAMMA_MAX_STEPS})")
    return -math.fsum(math.log(x + i * alpha) for i in range(j))


def log_gamma_alpha(alpha: float, x, construction: str = "log_convex"):
    """gamma_alpha(x) = log Gamma_alpha(x), with gamma_alpha(x + alpha) = log x + gamma_alpha(x).

    "log_convex" (default) is alpha^((x-1)/alpha) Gamma(x/alpha) / Gamma(1/alpha):
    convex in x, equal to log Gamma for alpha = 1 and normalized to 0 at x = 1.
    "recursive" is zero on [1, 1 + alpha) and extended by the functional
    equation; it is continuous and increasing on [1, inf) but concave between
    consecutive points 1 + j alpha.
    """
    if not alpha > 0:
        raise InvalidParams(f"alpha must be positive, got {alpha}")
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)) or np.any(~np.isfinite(arr)):
        raise InvalidParams("gamma_alpha is defined for finite x > 0")
    if construction == "log_convex":
        out = (arr - 1.0) / alpha * math.log(alpha) + gammaln(arr / alpha) - gammaln(1.0 / alpha)
    elif construction == "recursive":
        out = np.vectorize(lambda z: _log_gamma_recursive(alpha, float(z)), otypes=[float])(arr)
    else:
        raise InvalidParams(f"unknown gamma_alpha construction {construction!r}")
    return float(out) if np.ndim(out) == 0 else out


def gamma_alpha(alpha: float, x, construction: str = "log_convex"):
    return np.exp(log_gamma_alpha(alpha, x, construction))


def check_gautschi(alpha: float, x: float, s: float, construction: str = "log_convex") -> CheckReport:
    """x^(1-s/alpha) <= Gamma_alpha(x+alpha) / Gamma_alpha(x+s) <= (x+alpha)^(1-s/alpha), in log scale."""
    if not alpha > 0 or not x > 0:
        raise InvalidParams(f"need alpha > 0 and x > 0, got alpha={alpha}, x={x}")
    if not 0 <= s <= alpha:
        raise InvalidParams(f"need 0 <= s <= alpha, got s={s}")
    top = log_gamma_alpha(alpha, x + alpha, construction)
    bottom = log_gamma_alpha(alpha, x + s, construction)
    log_ratio = top - bottom
    exponent = 1.0 - s / alpha
    lower = exponent * math.log(x)
    upper = exponent * math.log(x + alpha)
    slack = min(log_ratio - lower, upper - log_ratio)
    tolerance = GAUTSCHI_TOLERANCE * max(1.0, abs(top), abs(bottom))
    passed = slack >= -tolerance
    return CheckReport(
        name="gautschi",
        n_samples=1,
        worst_slack=slack,
        tolerance=tolerance,
        passed=passed,
        witness=None if passed else {"alpha_x_s": [alpha, x, s], "log_bounds": [lower, log_ratio, upper]},
        detail=f"lower margin {log_ratio - lower:.3e}, upper margin {upper - log_ratio:.3e}",
    )


# ============================================================================
# Linear schedules
# ============================================================================


def bounds_linear_schedule(L: float, mu: float, alpha: float, k: int) -> BoundReport:
    """Lower bound on C_k and upper bound on sum c_t / L_t for L_t = L + alpha t.

    ``value`` is their ratio, which multiplies sigma^2 in the relSGD bound.
    Three regimes: alpha > mu, alpha = mu (C_k = k exactly) and alpha < mu,
    where Gamma_alpha enters.
    """
    _check_smoothness(L, mu)
    if not alpha > 0:
        raise InvalidParams(f"alpha must be positive, got {alpha}")
    k = _check_iterations(k)
    if math.isclose(alpha, mu, rel_tol=1e-14):
        regime = "alpha_eq_mu"
        C_lower = float(k)
        sum_upper = (math.log(L + k * mu) - math.log(L)) / mu + 1.0 / L
    elif alpha > mu:
        regime = "alpha_gt_mu"
        e = mu / alpha
        top, base = L - mu + (k + 1) * alpha, L - mu + alpha
        if mu == 0:
            C_lower = L * (math.log(top) - math.log(base)) / alpha
        else:
            C_lower = (L - mu) ** (1 - e) * base**e * math.expm1(e * (math.log(top) - math.log(base))) / mu
        sum_upper = 1.0 / L + base ** (1 - e) * ((L - mu) ** (e - 1) - (L - mu + k * alpha) ** (e - 1)) / (
            alpha - mu
        )
    else:
        regime = "alpha_lt_mu"
        e = mu / alpha
        log_G = log_gamma_alpha(alpha, L - mu + alpha) - log_gamma_alpha(alpha, L)
        m = max(alpha, mu - alpha)
        top, base = L - m + (k - 1) * alpha, L - m
        C_lower = 1.0 + math.exp(log_G + e * math.log(base)) * math.expm1(e * (math.log(top) - math.log(base))) / mu
        sum_upper = 1.0 / L + math.exp(log_G + (e - 1) * math.log(L)) * math.expm1(
            (e - 1) * (math.log(L + k * alpha) - math.log(L))
        ) / (mu - alpha)
    return BoundReport(
        name="linear_schedule",
        quantity="weight_sums",
        value=sum_upper / C_lower,
        terms={"C_lower": C_lower, "sum_upper": sum_upper},
        inputs={"L": L, "mu": mu, "alpha": alpha, "k": k},
        notes=[regime],
    )
