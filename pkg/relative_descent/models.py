"""
Pydantic models for reports, problem instances and experiment configuration.
Everything the CLI writes or reads passes through one of these models.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


# ============================================================================
# Theory and verification reports
# ============================================================================


@dataclass(frozen=True)
class WeightSequence:
    """Weights c_t held in log scale, their sum C_k, and the normalized form.

    Sequences raised to large powers overflow in linear scale, so ``c`` and
    ``total`` are derived on demand; ``normalized`` always sums to one.
    """

    log_c: np.ndarray
    log_total: float
    normalized: np.ndarray

    @property
    def k(self) -> int:
        return int(self.log_c.shape[0])

    @property
    def c(self) -> np.ndarray:
        return np.exp(self.log_c)

    @property
    def total(self) -> float:
        return float(np.exp(self.log_total))


class BoundReport(BaseModel):
    """A theoretical bound and the inputs it was evaluated at"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str = Field(..., description="Evaluator that produced the bound")
    quantity: Literal[
        "suboptimality",
        "weighted_suboptimality",
        "bregman_distance",
        "lyapunov",
        "gradient_surrogate",
        "weight_sums",
        "stepsize",
        "iterations",
    ] = Field(..., description="Quantity bounded")
    value: float = Field(..., description="Headline bound value")
    terms: Dict[str, float] = Field(default_factory=dict, description="Secondary bounds and factors")
    inputs: Dict[str, Optional[float]] = Field(default_factory=dict, description="Echoed inputs")
    weights: Optional[WeightSequence] = Field(None, exclude=True, description="Weights of the weighted bound")
    notes: List[str] = Field(default_factory=list)


class CheckReport(BaseModel):
    """Outcome of one sampled inequality or oracle check"""

    name: str = Field(..., description="Check name")
    n_samples: int = Field(..., ge=0, description="Number of sampled points, pairs or draws")
    worst_slack: float = Field(..., description="Minimum signed slack in the inequality's own units")
    tolerance: float = Field(..., description="Slack below -tolerance fails")
    passed: bool
    witness: Optional[Dict[str, List[float]]] = Field(None, description="Offending sample when failing")
    detail: str = ""


# ============================================================================
# Problem instances
# ============================================================================


class ProblemInstance(BaseModel):
    """Serialized problem: matrices as row-major nested lists, certificates as scalars/vectors"""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["quad_quartic", "poisson_kl", "regularized_poisson", "d_optimal"]
    matrix: List[List[float]] = Field(..., description="M, A or H, row-major")
    vector: Optional[List[float]] = Field(None, description="b for Poisson problems")
    a: Optional[float] = Field(None, gt=0, description="Quartic coefficient")
    mu_reg: Optional[float] = Field(None, gt=0, description="Log-barrier regularization weight")
    x0: Optional[List[float]] = None
    L: Optional[float] = Field(None, gt=0)
    mu: Optional[float] = Field(None, ge=0)
    w: Optional[List[float]] = None
    sigma2: Optional[float] = Field(None, ge=0)
    f_star: Optional[float] = None
    x_star: Optional[List[float]] = None

    @field_validator("matrix")
    @classmethod
    def validate_rectangular(cls, v):
        if not v or any(len(row) != len(v[0]) for row in v) or len(v[0]) == 0:
            raise ValueError("matrix must be a nonempty rectangular list of rows")
        return v


# ============================================================================
# Experiment configuration
# ============================================================================


class QuadQuarticParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(100, ge=1)
    a: float = Field(0.1, gt=0)
    seed: int = 0
    x0_scale: float = Field(1e3, gt=0, description="Standard deviation of x0 coordinates")


class PoissonParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    m: int = Field(100, ge=1)
    n: int = Field(10, ge=1)
    seed: int = 0
    mu_reg: float = Field(0.0, ge=0)


class DOptimalParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    m: int = Field(3, ge=1)
    n: int = Field(10, ge=2)
    seed: int = 0


class InstanceParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    path: str


class ExperimentSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., min_length=1)
    seed: int = 0
    replicates: int = Field(1, ge=1)
    seeds: Optional[List[int]] = Field(None, min_length=1, description="Explicit replicate seeds")
    stride: int = Field(1, ge=1, description="Keep every stride-th iterate in traces")
    output_dir: Optional[str] = None
    workers: Optional[int] = Field(None, ge=1)

    @property
    def replicate_count(self) -> int:
        return len(self.seeds) if self.seeds is not None else self.replicates


class ProblemSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    builder: Literal["quad_quartic", "poisson", "d_optimal", "instance"]
    params: Dict[str, Any] = Field(default_factory=dict)
    L: Optional[float] = Field(None, gt=0, description="Override of the smoothness certificate")
    mu: Optional[float] = Field(None, ge=0)
    sigma2: Optional[float] = Field(None, ge=0)
    f_star: Optional[float] = None


class ScheduleSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["constant", "linear", "sqrt", "fixed_horizon_optimal"]
    L0: Optional[float] = Field(None, gt=0, description="Defaults to the certificate L")
    alpha: float = Field(0.0, ge=0, description="Linear growth per iteration")
    alpha_scale: Optional[float] = Field(None, gt=0, description="Linear growth as a multiple of the certificate L")
    c: Optional[float] = Field(None, gt=0, description="sqrt coefficient")
    scale: float = Field(1.0, gt=0, description="Multiplier on the certificate L when L0/c are unset")

    @model_validator(mode="after")
    def check_alpha(self):
        if self.alpha_scale is not None and self.alpha > 0:
            raise ValueError("set at most one of 'alpha' or 'alpha_scale'")
        return self


class AlgorithmSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    method: Literal["relgd", "gd", "relrcds", "relrcd", "relsgd"]
    iterations: Optional[int] = Field(None, ge=1)
    epochs: Optional[float] = Field(None, gt=0)
    L: Optional[float] = Field(None, gt=0)
    L_scale: float = Field(1.0, gt=0)
    tau: int = Field(1, ge=1)
    eso_rule: Literal["spectral", "diagonal"] = "spectral"
    minibatch: int = Field(1, ge=1)
    schedule: Optional[ScheduleSection] = None
    full_step: bool = False
    early_stop_tol: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def check_budget(self):
        if (self.iterations is None) == (self.epochs is None):
            raise ValueError("set exactly one of 'iterations' or 'epochs'")
        if self.method == "relsgd" and self.schedule is None:
            raise ValueError("relsgd needs a [schedule] section")
        if self.method != "relsgd" and self.schedule is not None:
            raise ValueError(f"{self.method} does not take a schedule")
        return self


class CheckSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    smoothness_scale: float = Field(1.0, gt=0, description="Scale applied to L before checking")
    n_pairs: Optional[int] = Field(None, ge=1)
    seed: int = 0


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    experiment: ExperimentSection
    problem: ProblemSection
    algorithms: Dict[str, AlgorithmSection] = Field(..., min_length=1)
    check: CheckSection = Field(default_factory=CheckSection)


# ============================================================================
# Run manifest
# ============================================================================


class RunRecord(BaseModel):
    label: str
    replicate: int
    provenance: str = Field(..., description="Seed entropy and spawn key")
    status: Literal["ok", "aborted", "failed"]
    error: Optional[str] = None
    trace_file: Optional[str] = None
    iterations: int = 0


class Manifest(BaseModel):
    name: str
    config_hash: str
    package_version: str
    created_at: str
    base_seed: int
    f_star: Optional[float] = None
    f_star_kind: Optional[Literal["exact", "reference", "configured"]] = None
    eso_max_v: Dict[str, float] = Field(default_factory=dict)
    sigma2: Dict[str, float] = Field(default_factory=dict)
    runs: List[RunRecord] = Field(default_factory=list)
    notes: List[str] = Field(default_factory=list)
