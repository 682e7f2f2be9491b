"""
Experiment runner: config loading, problem construction, replicate fan-out,
theoretical-bound overlays and verification reports.

Replicates run in a process pool; each owns its seed sequence and trace file,
and the manifest is written once every replicate has finished. A failing
replicate is logged and recorded in the manifest without stopping its
siblings.
"""

import hashlib
import json
import logging
import math
import tomllib
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError
from tqdm import tqdm

from .algorithms import (
    Constant,
    FixedHorizonOptimal,
    Linear,
    RunTrace,
    SqrtGrowth,
    StepsizeSchedule,
    gd,
    relgd,
    relrcd,
    relrcds,
    relsgd,
)
from .bregman import bregman, weighted_bregman
from .config import RunnerSettings, get_output_directory
from .errors import ConfigError, MissingCertificate, OracleUnavailable
from .models import (
    AlgorithmSection,
    CheckReport,
    DOptimalParams,
    ExperimentConfig,
    InstanceParams,
    Manifest,
    PoissonParams,
    ProblemSection,
    QuadQuarticParams,
    RunRecord,
    ScheduleSection,
)
from .problems import (
    EsoCertificate,
    Problem,
    QuadQuartic,
    d_optimal_random,
    estimate_sigma2,
    poisson_random,
    quad_quartic_random,
    restricted_gd_smoothness,
)
from .sampling import Sampling, make_rng, spawn_seeds, stream_provenance
from .storage import (
    CONFIG_FILE,
    MANIFEST_FILE,
    bounds_path,
    checks_path,
    read_instance,
    trace_path,
    write_bounds,
    write_checks,
    write_config,
    write_manifest,
    write_trace,
)
from .theory import bound_relgd_grid, bound_relrcd_eso_grid, bound_relrcds_grid, bound_relsgd_grid
from .verify import run_suite

logger = logging.getLogger(__name__)

PARAMS_MODELS: Dict[str, type[BaseModel]] = {
    "quad_quartic": QuadQuarticParams,
    "poisson": PoissonParams,
    "d_optimal": DOptimalParams,
    "instance": InstanceParams,
}


# ============================================================================
# Config loading
# ============================================================================


def _validation_message(error: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(part) for part in err['loc']) or '<root>'}: {err['msg']}" for err in error.errors()
    )


def parse_config(data: Dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid experiment config: {_validation_message(e)}") from e


def load_config(path: Path) -> ExperimentConfig:
    """Read a TOML (or JSON, by suffix) experiment config; every failure is a ConfigError."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        data = json.loads(text) if path.suffix.lower() == ".json" else tomllib.loads(text)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot parse config {path}: {e}") from e
    return parse_config(data)


def config_hash(config: ExperimentConfig) -> str:
    """sha256 of the canonical JSON form of the config."""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def resolve_output_dir(
    config: ExperimentConfig, output_dir: Optional[Path] = None, settings: Optional[RunnerSettings] = None
) -> Path:
    """Explicit argument, then the config's output_dir, then RELDESCENT_OUTPUT_DIR/<name>."""
    if output_dir is not None:
        return Path(output_dir)
    if config.experiment.output_dir is not None:
        return Path(config.experiment.output_dir)
    return get_output_directory(config.experiment.name, settings)


# ============================================================================
# Problem and algorithm resolution
# ============================================================================


def build_problem(section: ProblemSection, base_dir: Optional[Path] = None) -> tuple[Problem, np.ndarray]:
    """Instantiate the configured problem and its starting point, applying certificate overrides."""
    try:
        params = PARAMS_MODELS[section.builder].model_validate(section.params)
    except ValidationError as e:
        raise ConfigError(f"invalid problem.params for {section.builder}: {_validation_message(e)}") from e

    if section.builder == "quad_quartic":
        problem, x0 = quad_quartic_random(**params.model_dump())
    elif section.builder == "poisson":
        problem, x0 = poisson_random(**params.model_dump())
    elif section.builder == "d_optimal":
        problem, x0 = d_optimal_random(**params.model_dump())
    else:
        path = Path(params.path)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        try:
            problem, x0 = read_instance(path)
        except FileNotFoundError as e:
            raise ConfigError(f"problem instance not found: {path}") from e
        if x0 is None:
            raise ConfigError(f"instance {path} stores no starting point x0")

    problem = problem.with_certificates(L=section.L, mu=section.mu, sigma2=section.sigma2, f_star=section.f_star)
    logger.info(f"Built {problem.kind} problem with n={problem.n} (L={problem.L:g}, mu={problem.mu:g})")
    return problem, x0


@dataclass(frozen=True)
class AlgorithmPlan:
    """An algorithm section resolved against a concrete problem."""

    label: str
    section: AlgorithmSection
    k: int
    iterations_per_epoch: float
    L: Optional[float] = None
    certificate: Optional[EsoCertificate] = None
    schedule: Optional[StepsizeSchedule] = None

    @property
    def method(self) -> str:
        return self.section.method

    @property
    def epochs(self) -> float:
        return self.k / self.iterations_per_epoch


def iterations_per_epoch(section: AlgorithmSection, p: Problem) -> float:
    if section.method in ("relgd", "gd"):
        return 1.0
    if section.method in ("relrcds", "relrcd"):
        return p.n / section.tau
    return p.n_components / section.minibatch


def build_schedule(section: ScheduleSection, L: float, p: Problem, x0: np.ndarray, k: int, minibatch: int):
    if section.kind == "constant":
        return Constant(section.L0 or L * section.scale)
    if section.kind == "linear":
        alpha = section.alpha if section.alpha_scale is None else section.alpha_scale * L
        return Linear(section.L0 or L * section.scale, alpha)
    if section.kind == "sqrt":
        return SqrtGrowth(section.c or L * section.scale)
    if p.sigma2 is None or p.x_star is None:
        raise MissingCertificate("fixed_horizon_optimal needs sigma2 and a known minimizer x*")
    D0 = bregman(p.h, p.x_star, x0)
    return FixedHorizonOptimal(p.sigma2 / minibatch, L, D0, k, p.mu)


def resolve_algorithm(label: str, section: AlgorithmSection, p: Problem, x0: np.ndarray) -> AlgorithmPlan:
    per_epoch = iterations_per_epoch(section, p)
    if section.iterations is not None:
        k = section.iterations
    else:
        k = max(1, math.ceil(section.epochs * per_epoch - 1e-9))

    if section.method == "gd":
        if section.L is not None:
            L = section.L
        elif isinstance(p, QuadQuartic):
            L = restricted_gd_smoothness(p, x0)
        else:
            raise ConfigError(f"algorithms.{label}: gd needs an explicit L for a {p.kind} problem")
    else:
        L = section.L if section.L is not None else p.L
    L *= section.L_scale

    certificate = None
    schedule = None
    if section.method == "relrcd":
        cert = p.eso_certificate(Sampling(p.n, section.tau), section.eso_rule)
        if section.L_scale != 1.0:
            cert = EsoCertificate(
                cert.sampling,
                cert.v * section.L_scale,
                cert.w,
                certified=cert.certified and section.L_scale >= 1.0,
                rule=cert.rule,
            )
        certificate = cert
    elif section.method == "relsgd":
        schedule = build_schedule(section.schedule, L, p, x0, k, section.minibatch)

    logger.debug(f"{label}: {section.method} for k={k} iterations ({k / per_epoch:g} epochs), L={L:g}")
    return AlgorithmPlan(label, section, k, per_epoch, L, certificate, schedule)


def run_algorithm(
    plan: AlgorithmPlan, p: Problem, x0: np.ndarray, rng: np.random.Generator, stride: int, seed: str
) -> RunTrace:
    s = plan.section
    common = dict(stride=stride, seed=seed)
    if plan.method == "relgd":
        return relgd(p, x0, plan.L, plan.k, full_step=s.full_step, early_stop_tol=s.early_stop_tol, **common)
    if plan.method == "gd":
        return gd(p, x0, plan.L, plan.k, full_step=s.full_step, early_stop_tol=s.early_stop_tol, **common)
    if plan.method == "relrcds":
        return relrcds(
            p, x0, plan.L, s.tau, plan.k, rng, full_step=s.full_step, early_stop_tol=s.early_stop_tol, **common
        )
    if plan.method == "relrcd":
        return relrcd(
            p, x0, plan.certificate, plan.k, rng, full_step=s.full_step, early_stop_tol=s.early_stop_tol, **common
        )
    return relsgd(p, x0, plan.schedule, s.minibatch, plan.k, rng, **common)


# ============================================================================
# Reference optimum
# ============================================================================


def reference_budget(plans: List[AlgorithmPlan], settings: RunnerSettings) -> int:
    """Multiplier times the longest run measured in relGD iterations (epochs), capped."""
    longest = max(math.ceil(plan.epochs) for plan in plans)
    return int(min(settings.reference_multiplier * longest, settings.reference_max_iterations))


def reference_optimum(p: Problem, x0: np.ndarray, k: int) -> float:
    """Best value reached by a long relGD run; an upper estimate of f*."""
    trace = relgd(p, x0, k=k, stride=k)
    f_star = float(np.min(trace.f))
    logger.info(f"Reference optimum f* ~ {f_star:.12g} from {k} relGD iterations")
    return f_star


# ============================================================================
# Replicates
# ============================================================================


@dataclass(frozen=True)
class ReplicateTask:
    plan: AlgorithmPlan
    replicate: int
    problem: Problem
    x0: np.ndarray
    seed: np.random.SeedSequence
    stride: int
    output_dir: Path


def run_replicate(task: ReplicateTask) -> dict:
    """Run one (algorithm, replicate) pair and write its trace; never raises."""
    provenance = stream_provenance(task.seed)
    result = {
        "label": task.plan.label,
        "replicate": task.replicate,
        "provenance": provenance,
        "status": "failed",
        "error": None,
        "trace_file": None,
        "iterations": 0,
        "final_gap": None,
        "min_gap": None,
    }
    try:
        rng = make_rng(task.seed)
        trace = run_algorithm(task.plan, task.problem, task.x0, rng, task.stride, provenance)
        path = write_trace(trace, trace_path(task.output_dir, task.plan.label, task.replicate), task.stride)
        gap = trace.gap
        result.update(
            status="aborted" if trace.status == "aborted" else "ok",
            error=trace.error,
            trace_file=str(path.relative_to(task.output_dir)),
            iterations=len(trace) - 1,
            final_gap=None if np.isnan(gap[-1]) else float(gap[-1]),
            min_gap=None if np.all(np.isnan(gap)) else float(np.nanmin(gap)),
        )
    except Exception as e:
        logger.error(f"{task.plan.label} replicate {task.replicate} failed: {type(e).__name__}: {e}")
        result["error"] = f"{type(e).__name__}: {e}"
    return result


def replicate_seeds(config: ExperimentConfig) -> List[np.random.SeedSequence]:
    if config.experiment.seeds is not None:
        return [np.random.SeedSequence(seed) for seed in config.experiment.seeds]
    return spawn_seeds(config.experiment.seed, config.experiment.replicates)


class ExperimentRunner:
    """Run every configured algorithm over every replicate and write the artifacts."""

    def __init__(
        self,
        config: ExperimentConfig,
        output_dir: Optional[Path] = None,
        workers: Optional[int] = None,
        settings: Optional[RunnerSettings] = None,
        base_dir: Optional[Path] = None,
        progress: bool = True,
    ):
        self.config = config
        self.settings = settings or RunnerSettings()
        self.output_dir = resolve_output_dir(config, output_dir, self.settings)
        self.workers = workers or config.experiment.workers or self.settings.workers
        self.base_dir = base_dir
        self.progress = progress
        self.results: List[dict] = []
        self.notes: List[str] = []

    def prepare(self) -> tuple[Problem, np.ndarray, List[AlgorithmPlan], Optional[str]]:
        p, x0 = build_problem(self.config.problem, self.base_dir)
        plans = [resolve_algorithm(label, s, p, x0) for label, s in self.config.algorithms.items()]
        if self.config.problem.f_star is not None:
            kind = "configured"
        elif p.f_star is not None:
            kind = "exact"
        else:
            budget = reference_budget(plans, self.settings)
            p = p.with_certificates(f_star=reference_optimum(p, x0, budget))
            kind = "reference"
            self.notes.append(f"f* is a reference value from {budget} relGD iterations, not exact")
        return p, x0, plans, kind

    def run(self) -> Manifest:
        p, x0, plans, f_star_kind = self.prepare()
        seeds = replicate_seeds(self.config)
        stride = self.config.experiment.stride
        tasks = [
            ReplicateTask(plan, r, p, x0, seed, stride, self.output_dir)
            for plan in plans
            for r, seed in enumerate(seeds)
        ]
        logger.info(
            f"Running {len(plans)} algorithms x {len(seeds)} replicates into {self.output_dir} "
            f"with {self.workers} workers"
        )
        self.output_dir.mkdir(parents=True, exist_ok=True)
        if self.workers > 1 and len(tasks) > 1:
            self._process_parallel(tasks)
        else:
            self._process_sequential(tasks)

        manifest = self._manifest(p, x0, plans, f_star_kind)
        write_config(self.config, self.output_dir / CONFIG_FILE)
        write_manifest(manifest, self.output_dir / MANIFEST_FILE)
        return manifest

    def _process_sequential(self, tasks: List[ReplicateTask]) -> None:
        for task in tqdm(tasks, desc="Replicates", unit="run", disable=not self.progress):
            self.results.append(run_replicate(task))

    def _process_parallel(self, tasks: List[ReplicateTask]) -> None:
        with ProcessPoolExecutor(max_workers=self.workers) as executor:
            futures = {executor.submit(run_replicate, task): task for task in tasks}
            with tqdm(total=len(tasks), desc="Replicates", unit="run", disable=not self.progress) as pbar:
                for future in as_completed(futures):
                    task = futures[future]
                    try:
                        self.results.append(future.result())
                    except Exception as e:
                        logger.error(f"Worker for {task.plan.label} replicate {task.replicate} crashed: {e}")
                        self.results.append(
                            {
                                "label": task.plan.label,
                                "replicate": task.replicate,
                                "provenance": stream_provenance(task.seed),
                                "status": "failed",
                                "error": f"{type(e).__name__}: {e}",
                                "trace_file": None,
                                "iterations": 0,
                                "final_gap": None,
                                "min_gap": None,
                            }
                        )
                    pbar.update(1)

    def _manifest(self, p: Problem, x0: np.ndarray, plans: List[AlgorithmPlan], f_star_kind) -> Manifest:
        from . import __version__

        order = {plan.label: i for i, plan in enumerate(plans)}
        self.results.sort(key=lambda r: (order[r["label"]], r["replicate"]))
        runs = [RunRecord(**{k: v for k, v in r.items() if k not in ("final_gap", "min_gap")}) for r in self.results]

        eso_max_v = {plan.label: float(np.max(plan.certificate.v)) for plan in plans if plan.certificate}
        sigma2 = {}
        for plan in plans:
            if plan.method != "relsgd":
                continue
            if p.sigma2 is not None:
                sigma2[plan.label] = p.sigma2 / plan.section.minibatch
            else:
                rng = make_rng(self.config.experiment.seed)
                try:
                    estimate, heuristic = estimate_sigma2(p, x0, plan.section.minibatch, rng=rng)
                except OracleUnavailable as e:
                    self.notes.append(f"no sigma2 for {plan.label}: {e}")
                    continue
                sigma2[plan.label] = estimate
                self.notes.append(
                    f"sigma2 for {plan.label} estimated at x0" + (" (heuristic Burg modulus)" if heuristic else "")
                )

        summary = self.summary()
        if not summary.empty:
            ranking = " < ".join(summary.dropna(subset=["median_final_gap"]).sort_values("median_final_gap").index)
            if ranking:
                self.notes.append(f"median final gap ordering: {ranking}")
            if f_star_kind == "reference" and (summary["min_gap"] < 0).any():
                self.notes.append("some traces go below the reference f*; gaps there are negative")

        failed = sum(r.status == "failed" for r in runs)
        if failed:
            logger.warning(f"{failed} of {len(runs)} runs failed; see the manifest for errors")
        return Manifest(
            name=self.config.experiment.name,
            config_hash=config_hash(self.config),
            package_version=__version__,
            created_at=datetime.now(timezone.utc).isoformat(),
            base_seed=self.config.experiment.seed,
            f_star=p.f_star,
            f_star_kind=f_star_kind,
            eso_max_v=eso_max_v,
            sigma2=sigma2,
            runs=runs,
            notes=self.notes,
        )

    def summary(self) -> pd.DataFrame:
        """Per-label status counts and median final gap over completed replicates."""
        if not self.results:
            return pd.DataFrame()
        frame = pd.DataFrame(self.results)
        grouped = frame.groupby("label", sort=False)
        return pd.DataFrame(
            {
                "runs": grouped.size(),
                "ok": grouped["status"].apply(lambda s: int((s == "ok").sum())),
                "aborted": grouped["status"].apply(lambda s: int((s == "aborted").sum())),
                "failed": grouped["status"].apply(lambda s: int((s == "failed").sum())),
                "median_final_gap": grouped["final_gap"].apply(lambda s: s.dropna().median()),
                "min_gap": grouped["min_gap"].apply(lambda s: s.dropna().min()),
            }
        )


def run_experiment(
    config: ExperimentConfig,
    output_dir: Optional[Path] = None,
    workers: Optional[int] = None,
    settings: Optional[RunnerSettings] = None,
    base_dir: Optional[Path] = None,
    progress: bool = True,
    bounds: bool = True,
) -> Manifest:
    """Run the experiment, then write the bound overlays the certificates permit."""
    runner = ExperimentRunner(config, output_dir, workers, settings, base_dir, progress)
    manifest = runner.run()
    if bounds:
        written = emit_bounds(config, runner.output_dir, base_dir=base_dir, strict=False)
        logger.info(f"Wrote {len(written)} bound overlays")
    return manifest


# ============================================================================
# Bound overlays
# ============================================================================


def _overlay(plan: AlgorithmPlan, p: Problem, x0: np.ndarray) -> pd.DataFrame:
    if p.x_star is None:
        raise MissingCertificate(f"{plan.label}: bounds need a known minimizer x*")
    ks = np.arange(1, plan.k + 1)
    columns: Dict[str, np.ndarray] = {"iter": ks, "epoch": ks / plan.iterations_per_epoch}
    D0 = bregman(p.h, p.x_star, x0)

    if plan.method in ("relrcds", "relrcd") and p.f_star is None:
        raise MissingCertificate(f"{plan.label}: coordinate bounds need f*")
    gap0 = p.value(x0) - p.f_star if p.f_star is not None else None

    if plan.method == "relgd":
        columns["bound"] = bound_relgd_grid(plan.L, p.mu, D0, ks)
    elif plan.method == "gd":
        D0_euclid = 0.5 * float(np.sum((p.x_star - x0) ** 2))
        columns["bound"] = bound_relgd_grid(plan.L, 0.0, D0_euclid, ks)
    elif plan.method == "relrcds":
        columns["bound"] = bound_relrcds_grid(plan.L, p.mu, plan.section.tau, p.n, D0, gap0, ks)
    elif plan.method == "relrcd":
        cert = plan.certificate
        D0_v = weighted_bregman(p.h, p.x_star, x0, cert.v)
        grid = bound_relrcd_eso_grid(min(cert.delta, 1.0), cert.p0, D0_v, gap0, ks)
        columns["bound"] = grid["weighted"]
        columns["bregman"] = grid["bregman"]
        columns["gradient_surrogate"] = grid["gradient_surrogate"]
    else:
        if p.sigma2 is None:
            raise MissingCertificate(f"{plan.label}: relSGD bounds need the noise level sigma2")
        sigma2 = p.sigma2 / plan.section.minibatch
        columns["bound"] = bound_relsgd_grid(plan.schedule, p.L, p.mu, sigma2, D0, ks)

    if p.f_star is not None:
        columns["f_bound"] = p.f_star + columns["bound"]
    return pd.DataFrame(columns)


def emit_bounds(
    config: ExperimentConfig,
    output_dir: Optional[Path] = None,
    *,
    base_dir: Optional[Path] = None,
    settings: Optional[RunnerSettings] = None,
    strict: bool = True,
) -> Dict[str, Path]:
    """Write bounds/<label>.csv for every algorithm; strict mode raises MissingCertificate."""
    settings = settings or RunnerSettings()
    output_dir = resolve_output_dir(config, output_dir, settings)
    p, x0 = build_problem(config.problem, base_dir)
    written = {}
    for label, section in config.algorithms.items():
        plan = resolve_algorithm(label, section, p, x0)
        try:
            frame = _overlay(plan, p, x0)
        except MissingCertificate as e:
            if strict:
                raise
            logger.warning(f"No bound overlay for {label}: {e}")
            continue
        written[label] = write_bounds(frame, bounds_path(output_dir, label))
    return written


# ============================================================================
# Verification
# ============================================================================


def check(
    config: ExperimentConfig,
    output_dir: Optional[Path] = None,
    *,
    base_dir: Optional[Path] = None,
    settings: Optional[RunnerSettings] = None,
) -> List[CheckReport]:
    """Run the verification suite on the configured problem and write checks/checks.csv."""
    settings = settings or RunnerSettings()
    output_dir = resolve_output_dir(config, output_dir, settings)
    p, x0 = build_problem(config.problem, base_dir)
    plans = [resolve_algorithm(label, s, p, x0) for label, s in config.algorithms.items()]
    certificates = [plan.certificate for plan in plans if plan.certificate is not None]
    L = p.L * config.check.smoothness_scale
    if config.check.smoothness_scale != 1.0:
        logger.info(f"Checking relative smoothness at the scaled constant L = {L:g}")
    reports = run_suite(
        p,
        x0,
        make_rng(config.check.seed),
        L=L,
        certificates=certificates,
        n_pairs=config.check.n_pairs,
    )
    write_checks(reports, checks_path(output_dir))
    return reports
