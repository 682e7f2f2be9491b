"""
Relative gradient, coordinate and stochastic descent methods.

Every method returns a RunTrace holding one record per iterate, t = 0..k.
Randomized methods draw from the Generator they are given and nothing else,
so identical inputs and seeds give bitwise-identical traces.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from .bregman import bregman, in_domain, mirror_step, weighted_bregman
from .errors import CertificateError, DimensionMismatch, DomainError, InvalidParams, MissingOptimum, StepOutOfDomain
from .problems import EsoCertificate, Problem, euclidean_view, full_step_point, stochastic_grad
from .sampling import Sampling, draw
from .theory import optimal_constant_stepsize

logger = logging.getLogger(__name__)

MAX_STEP_RETRIES = 10
MONOTONE_SLACK = 1e-12
TRACE_COLUMNS = ["iter", "epoch", "f", "gap", "stepsize", "breg_to_opt", "breg_full_step", "seed"]


# ============================================================================
# Stepsize schedules
# ============================================================================


@dataclass(frozen=True)
class StepsizeSchedule:
    """A pure map t -> L_t > 0."""

    def at(self, t: int) -> float:
        raise NotImplementedError

    def values(self, k: int) -> np.ndarray:
        """L_0, ..., L_{k-1}."""
        return np.array([self.at(t) for t in range(k)], dtype=float)


@dataclass(frozen=True)
class Constant(StepsizeSchedule):
    L0: float

    def __post_init__(self):
        if not self.L0 > 0:
            raise InvalidParams(f"constant schedule needs L0 > 0, got {self.L0}")

    def at(self, t: int) -> float:
        return float(self.L0)

    def values(self, k: int) -> np.ndarray:
        return np.full(k, float(self.L0))


@dataclass(frozen=True)
class Linear(StepsizeSchedule):
    """L_t = L0 + alpha t."""

    L0: float
    alpha: float

    def __post_init__(self):
        if not self.L0 > 0 or self.alpha < 0:
            raise InvalidParams(f"linear schedule needs L0 > 0 and alpha >= 0, got {self.L0}, {self.alpha}")

    def at(self, t: int) -> float:
        return float(self.L0 + self.alpha * t)

    def values(self, k: int) -> np.ndarray:
        return self.L0 + self.alpha * np.arange(k, dtype=float)


@dataclass(frozen=True)
class SqrtGrowth(StepsizeSchedule):
    """L_t = c sqrt(t) for t >= 1, and c at t = 0."""

    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise InvalidParams(f"sqrt schedule needs c > 0, got {self.c}")

    def at(self, t: int) -> float:
        return float(self.c * math.sqrt(t)) if t >= 1 else float(self.c)

    def values(self, k: int) -> np.ndarray:
        out = self.c * np.sqrt(np.arange(k, dtype=float))
        if k:
            out[0] = self.c
        return out


@dataclass(frozen=True)
class FixedHorizonOptimal(StepsizeSchedule):
    """L_0 = L, then the constant that balances the relSGD bound over k steps.

    Falls back to L everywhere when sigma^2 = 0 or k = 1.
    """

    sigma2: float
    L: float
    D0: float
    k: int
    mu: float = 0.0
    constant: float = field(init=False)

    def __post_init__(self):
        if not self.L > 0 or self.sigma2 < 0 or self.D0 < 0 or self.k < 1:
            raise InvalidParams("fixed-horizon schedule needs L > 0, sigma2 >= 0, D0 >= 0, k >= 1")
        if self.sigma2 == 0 or self.k == 1:
            value = float(self.L)
        else:
            value = optimal_constant_stepsize(self.sigma2, self.L, self.D0, self.k, self.mu)
        object.__setattr__(self, "constant", value)

    def at(self, t: int) -> float:
        return float(self.L) if t == 0 else self.constant

    def values(self, k: int) -> np.ndarray:
        out = np.full(k, self.constant)
        if k:
            out[0] = self.L
        return out


def schedule_values(schedule: StepsizeSchedule, k: int) -> np.ndarray:
    values = schedule.values(k)
    if np.any(~(values > 0)):
        raise InvalidParams("stepsize schedule produced a nonpositive value")
    return values


# ============================================================================
# Traces
# ============================================================================


@dataclass
class RunTrace:
    """Per-iterate records of one run.

    ``stepsize[t]`` is the parameter used to reach x_t (NaN at t = 0);
    ``iterates`` keeps x_t for t divisible by ``stride`` and the final t.
    """

    method: str
    t: np.ndarray
    epoch: np.ndarray
    f: np.ndarray
    stepsize: np.ndarray
    breg_to_opt: np.ndarray
    breg_full_step: np.ndarray
    wall_clock: np.ndarray
    iterates: dict[int, np.ndarray] = field(default_factory=dict)
    seed: str = ""
    f_star: Optional[float] = None
    status: str = "ok"
    error: Optional[str] = None
    retries: int = 0

    def __len__(self) -> int:
        return int(self.t.shape[0])

    @property
    def gap(self) -> np.ndarray:
        if self.f_star is None:
            return np.full(len(self), np.nan)
        return self.f - self.f_star

    @property
    def final_iterate(self) -> np.ndarray:
        return self.iterates[int(self.t[-1])]

    def to_frame(self, stride: int = 1) -> pd.DataFrame:
        frame = pd.DataFrame(
            {
                "iter": self.t,
                "epoch": self.epoch,
                "f": self.f,
                "gap": self.gap,
                "stepsize": self.stepsize,
                "breg_to_opt": self.breg_to_opt,
                "breg_full_step": self.breg_full_step,
                "seed": self.seed,
            },
            columns=TRACE_COLUMNS,
        )
        if stride > 1:
            keep = (self.t % stride == 0) | (self.t == self.t[-1])
            frame = frame[keep].reset_index(drop=True)
        return frame

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, method: str = "unknown") -> "RunTrace":
        missing = set(TRACE_COLUMNS) - set(frame.columns)
        if missing:
            raise ValueError(f"trace frame lacks columns {sorted(missing)}")
        gap = frame["gap"].to_numpy(dtype=float)
        f = frame["f"].to_numpy(dtype=float)
        known = ~np.isnan(gap)
        f_star = float(np.median(f[known] - gap[known])) if known.any() else None
        return cls(
            method=method,
            t=frame["iter"].to_numpy(dtype=int),
            epoch=frame["epoch"].to_numpy(dtype=float),
            f=f,
            stepsize=frame["stepsize"].to_numpy(dtype=float),
            breg_to_opt=frame["breg_to_opt"].to_numpy(dtype=float),
            breg_full_step=frame["breg_full_step"].to_numpy(dtype=float),
            wall_clock=np.full(len(frame), np.nan),
            seed=str(frame["seed"].iloc[0]) if len(frame) else "",
            f_star=f_star,
        )


class _Recorder:
    """Accumulates trace records while a method runs."""

    def __init__(self, p: Problem, method: str, stride: int, seed: Optional[str], full_step: bool, weights=None):
        if stride < 1:
            raise InvalidParams(f"stride must be at least 1, got {stride}")
        self.p = p
        self.method = method
        self.stride = stride
        self.seed = seed or ""
        self.full_step = full_step
        self.weights = weights
        self.rows: list[tuple] = []
        self.iterates: dict[int, np.ndarray] = {}
        self.start = time.perf_counter()
        self.last_x: Optional[np.ndarray] = None

    def full_step_distance(self, x: np.ndarray, L) -> float:
        z = full_step_point(self.p, x, L)
        if self.weights is not None:
            return weighted_bregman(self.p.h, x, z, self.weights)
        return bregman(self.p.h, x, z)

    def record(self, t: int, x: np.ndarray, epoch: float, stepsize: float, L_full=None) -> float:
        """Store x_t and return D_h(x_t, x_(t+1,*)) when computed (NaN otherwise)."""
        f = self.p.value(x)
        to_opt = bregman(self.p.h, self.p.x_star, x) if self.p.x_star is not None else np.nan
        full = self.full_step_distance(x, L_full) if L_full is not None else np.nan
        self.rows.append((t, epoch, f, stepsize, to_opt, full, time.perf_counter() - self.start))
        if t % self.stride == 0:
            self.iterates[t] = x.copy()
        self.last_x = x
        return full

    def finish(self, status: str = "ok", error: Optional[str] = None, retries: int = 0) -> RunTrace:
        t_last = self.rows[-1][0]
        self.iterates.setdefault(t_last, self.last_x.copy())
        columns = list(zip(*self.rows))
        return RunTrace(
            method=self.method,
            t=np.array(columns[0], dtype=int),
            epoch=np.array(columns[1], dtype=float),
            f=np.array(columns[2], dtype=float),
            stepsize=np.array(columns[3], dtype=float),
            breg_to_opt=np.array(columns[4], dtype=float),
            breg_full_step=np.array(columns[5], dtype=float),
            wall_clock=np.array(columns[6], dtype=float),
            iterates=self.iterates,
            seed=self.seed,
            f_star=self.p.f_star,
            status=status,
            error=error,
            retries=retries,
        )


def _start(p: Problem, x0) -> np.ndarray:
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (p.n,):
        raise DimensionMismatch(f"x0 has shape {x.shape}, problem has n={p.n}")
    if not in_domain(p.h, p.Q, x):
        raise DomainError("x0 must lie in the feasible set and the domain of h")
    return x


def _check_iterations(k: int) -> int:
    if int(k) != k or k < 1:
        raise InvalidParams(f"iteration budget must be a positive integer, got {k}")
    return int(k)


def _stopped(full: float, tol: Optional[float]) -> bool:
    return tol is not None and full < tol


# ============================================================================
# Deterministic methods
# ============================================================================


def relgd(
    p: Problem,
    x0,
    L: Optional[float] = None,
    k: int = 100,
    *,
    stride: int = 1,
    full_step: bool = False,
    early_stop_tol: Optional[float] = None,
    seed: Optional[str] = None,
    method: str = "relgd",
) -> RunTrace:
    """Relative gradient descent: x_{t+1} = argmin <grad f(x_t), x> + L D_h(x, x_t) over Q."""
    k = _check_iterations(k)
    L = p.L if L is None else float(L)
    if L < p.L * (1 - 1e-12):
        logger.warning(f"{method}: L = {L:.6g} is below the certificate {p.L:.6g}; descent is not guaranteed")
    x = _start(p, x0)
    compute_full = full_step or early_stop_tol is not None
    rec = _Recorder(p, method, stride, seed, compute_full)
    full = rec.record(0, x, 0.0, np.nan, L if compute_full else None)
    for t in range(1, k + 1):
        if _stopped(full, early_stop_tol):
            logger.info(f"{method}: stopped at t={t - 1}, full-step distance {full:.3e}")
            return rec.finish(status="converged")
        x = mirror_step(p.h, p.Q, x, p.gradient(x), L)
        full = rec.record(t, x, float(t), L, L if compute_full else None)
    return rec.finish()


def gd(p: Problem, x0, L: float, k: int = 100, **options) -> RunTrace:
    """Classical gradient descent x - grad f(x) / L, as relgd in the Euclidean geometry."""
    view = euclidean_view(p, L)
    return relgd(view, x0, L, k, method="gd", **options)


# ============================================================================
# Coordinate methods
# ============================================================================


def _coordinate_gradient(p: Problem, x: np.ndarray, coords: np.ndarray) -> np.ndarray:
    if coords.size == p.n:
        return p.gradient(x)
    g = np.zeros(p.n)
    g[coords] = p.partial_gradient(x, coords)
    return g


def _coordinate_descent(
    p: Problem,
    x0,
    sampling: Sampling,
    stepsizes,
    k: int,
    rng: np.random.Generator,
    method: str,
    stride: int,
    full_step: bool,
    early_stop_tol: Optional[float],
    seed: Optional[str],
    weights=None,
) -> RunTrace:
    k = _check_iterations(k)
    if sampling.n != p.n:
        raise DimensionMismatch(f"sampling over {sampling.n} coordinates for a problem with n={p.n}")
    x = _start(p, x0)
    compute_full = full_step or early_stop_tol is not None
    recorded = float(np.max(stepsizes))
    rec = _Recorder(p, method, stride, seed, compute_full, weights)
    full = rec.record(0, x, 0.0, np.nan, stepsizes if compute_full else None)
    for t in range(1, k + 1):
        if _stopped(full, early_stop_tol):
            logger.info(f"{method}: stopped at t={t - 1}, full-step distance {full:.3e}")
            return rec.finish(status="converged")
        coords = draw(sampling, rng)
        x = mirror_step(p.h, p.Q, x, _coordinate_gradient(p, x, coords), stepsizes, coords)
        full = rec.record(t, x, t * sampling.p0, recorded, stepsizes if compute_full else None)
    return rec.finish()


def relrcds(
    p: Problem,
    x0,
    L: Optional[float],
    tau: int,
    k: int,
    rng: np.random.Generator,
    *,
    stride: int = 1,
    full_step: bool = False,
    early_stop_tol: Optional[float] = None,
    seed: Optional[str] = None,
) -> RunTrace:
    """Randomized coordinate descent with the short stepsize parameter L on tau-nice subsets."""
    L = p.L if L is None else float(L)
    if L < p.L * (1 - 1e-12):
        logger.warning(f"relrcds: L = {L:.6g} is below the certificate {p.L:.6g}")
    return _coordinate_descent(
        p, x0, Sampling(p.n, tau), L, k, rng, "relrcds", stride, full_step, early_stop_tol, seed
    )


def relrcd(
    p: Problem,
    x0,
    cert: EsoCertificate,
    k: int,
    rng: np.random.Generator,
    *,
    stride: int = 1,
    full_step: bool = False,
    early_stop_tol: Optional[float] = None,
    seed: Optional[str] = None,
) -> RunTrace:
    """Randomized coordinate descent with per-coordinate stepsize parameters v from an ESO.

    The full-step column is the v-weighted distance D_h(x_t, x_(t+1,*))_v.
    """
    v = np.asarray(cert.v, dtype=float)
    if np.any(~(v > 0)):
        raise CertificateError("ESO vector must be strictly positive")
    if not cert.certified:
        logger.warning(f"relrcd: running with an uncertified ESO vector (rule {cert.rule})")
    return _coordinate_descent(
        p, x0, cert.sampling, v, k, rng, "relrcd", stride, full_step, early_stop_tol, seed, weights=v
    )


# ============================================================================
# Stochastic method
# ============================================================================


def relsgd(
    p: Problem,
    x0,
    schedule: StepsizeSchedule,
    tau: int,
    k: int,
    rng: np.random.Generator,
    *,
    stride: int = 1,
    max_retries: int = MAX_STEP_RETRIES,
    seed: Optional[str] = None,
) -> RunTrace:
    """Relative SGD: x_{t+1} = argmin <g_t, x> + L_t D_h(x, x_t) with a minibatch oracle g_t.

    A step that would leave dom h is retried with a fresh oracle draw. After
    ``max_retries`` failures in one iteration the run ends with status "aborted"
    and the trace stops at the last feasible iterate.
    """
    k = _check_iterations(k)
    first = schedule.at(0)
    if first < p.L * (1 - 1e-12):
        logger.warning(f"relsgd: L_0 = {first:.6g} is below the certificate {p.L:.6g}")
    x = _start(p, x0)
    rec = _Recorder(p, "relsgd", stride, seed, full_step=False)
    rec.record(0, x, 0.0, np.nan)
    m = p.n_components
    retries = 0
    for t in range(1, k + 1):
        L_t = schedule.at(t - 1)
        for attempt in range(max_retries + 1):
            g = stochastic_grad(p, x, tau, rng)
            try:
                x_next = mirror_step(p.h, p.Q, x, g, L_t)
                break
            except StepOutOfDomain as e:
                retries += 1
                logger.debug(f"relsgd: step {t} left the domain (attempt {attempt + 1}): {e}")
        else:
            message = f"step {t} left dom h after {max_retries} retries"
            logger.warning(f"relsgd: {message}; run aborted")
            return rec.finish(status="aborted", error=f"StepOutOfDomain: {message}", retries=retries)
        x = x_next
        rec.record(t, x, t * tau / m, L_t)
    if retries:
        logger.info(f"relsgd: {retries} rejected steps were redrawn")
    return rec.finish(retries=retries)


# ============================================================================
# Weighted output
# ============================================================================


def weighted_output(trace: RunTrace, weights: Sequence[float], f_star: Optional[float] = None) -> float:
    """sum_t c_t (f(x_t) - f*) over t = 1..k, or t = 0..k when k + 1 weights are given."""
    f_star = trace.f_star if f_star is None else f_star
    if f_star is None:
        raise MissingOptimum("weighted output needs a known optimal value f*")
    c = np.asarray(weights, dtype=float)
    k = len(trace) - 1
    if c.shape == (k,):
        values = trace.f[1:]
    elif c.shape == (k + 1,):
        values = trace.f
    else:
        raise DimensionMismatch(f"{c.shape[0]} weights for a trace with k={k}")
    if np.any(c < 0):
        raise InvalidParams("weights must be nonnegative")
    if abs(float(np.sum(c)) - 1.0) > 1e-12:
        raise InvalidParams(f"weights must sum to 1, got {float(np.sum(c)):.15f}")
    return float(np.dot(c, values - f_star))
