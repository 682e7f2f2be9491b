"""
Local artifact storage for experiment runs.

Layout under an experiment's output directory:

    traces/<label>_r<NN>.csv   one trace per (algorithm, replicate)
    bounds/<label>.csv         theoretical overlay per algorithm
    checks/checks.csv          verification reports
    manifest.json              run manifest
    config.json                the resolved experiment config

CSV files are written with pandas at full float precision so a second run
with the same config reproduces them byte for byte. JSON documents go
through their pydantic models.
"""

import json
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from .algorithms import TRACE_COLUMNS, RunTrace
from .errors import DataError
from .models import CheckReport, ExperimentConfig, Manifest, ProblemInstance
from .problems import Problem, from_instance

logger = logging.getLogger(__name__)

TRACES_DIR = "traces"
BOUNDS_DIR = "bounds"
CHECKS_DIR = "checks"
CHECKS_FILE = "checks.csv"
MANIFEST_FILE = "manifest.json"
CONFIG_FILE = "config.json"

FLOAT_FORMAT = "%.17g"
CHECK_COLUMNS = ["name", "n_samples", "worst_slack", "tolerance", "passed", "witness", "detail"]

PathLike = Union[str, Path]


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _read_csv(path: PathLike, **kwargs) -> pd.DataFrame:
    try:
        return pd.read_csv(path, **kwargs)
    except FileNotFoundError:
        raise
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataError(f"cannot parse {path}: {e}") from e


def trace_filename(label: str, replicate: int) -> str:
    return f"{label}_r{replicate:02d}.csv"


def trace_path(output_dir: PathLike, label: str, replicate: int) -> Path:
    return Path(output_dir) / TRACES_DIR / trace_filename(label, replicate)


def bounds_path(output_dir: PathLike, label: str) -> Path:
    return Path(output_dir) / BOUNDS_DIR / f"{label}.csv"


def checks_path(output_dir: PathLike) -> Path:
    return Path(output_dir) / CHECKS_DIR / CHECKS_FILE


# ============================================================================
# Traces
# ============================================================================


def write_trace(trace: RunTrace, path: PathLike, stride: int = 1) -> Path:
    """Write a trace as CSV; rows with t % stride != 0 are dropped except the last."""
    path = _prepare(path)
    trace.to_frame(stride).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.debug(f"Wrote trace {path} ({len(trace)} iterates, stride {stride})")
    return path


def read_trace(path: PathLike, method: Optional[str] = None) -> RunTrace:
    frame = _read_csv(path, dtype={"seed": str}, keep_default_na=False, na_values=["", "nan", "NaN"])
    if list(frame.columns) != TRACE_COLUMNS:
        raise DataError(f"{path}: expected columns {TRACE_COLUMNS}, found {list(frame.columns)}")
    frame["seed"] = frame["seed"].fillna("")
    return RunTrace.from_frame(frame, method or Path(path).stem.rsplit("_r", 1)[0])


# ============================================================================
# Bound overlays
# ============================================================================


def write_bounds(frame: pd.DataFrame, path: PathLike) -> Path:
    """Write a per-k bound overlay; the first two columns are iter and epoch."""
    if list(frame.columns[:2]) != ["iter", "epoch"]:
        raise DataError("bound overlays start with the columns iter, epoch")
    path = _prepare(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_bounds(path: PathLike) -> pd.DataFrame:
    frame = _read_csv(path)
    if list(frame.columns[:2]) != ["iter", "epoch"]:
        raise DataError(f"{path} is not a bound overlay")
    return frame


# ============================================================================
# Check reports
# ============================================================================


def write_checks(reports: Iterable[CheckReport], path: PathLike) -> Path:
    """One row per report; the witness is stored as a JSON object string."""
    rows = []
    for report in reports:
        row = report.model_dump(exclude={"witness"})
        row["witness"] = json.dumps(report.witness) if report.witness is not None else ""
        rows.append(row)
    path = _prepare(path)
    pd.DataFrame(rows, columns=CHECK_COLUMNS).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_checks(path: PathLike) -> List[CheckReport]:
    frame = _read_csv(path, keep_default_na=False, dtype={"witness": str, "detail": str, "name": str})
    reports = []
    for row in frame.to_dict(orient="records"):
        witness = row.pop("witness")
        passed = row.pop("passed")
        try:
            reports.append(
                CheckReport(
                    **row,
                    passed=passed if isinstance(passed, (bool, np.bool_)) else str(passed) == "True",
                    witness=json.loads(witness) if witness else None,
                )
            )
        except (ValidationError, json.JSONDecodeError) as e:
            raise DataError(f"{path}: malformed check row {row.get('name')!r}: {e}") from e
    return reports


# ============================================================================
# JSON documents
# ============================================================================


def write_manifest(manifest: Manifest, path: PathLike) -> Path:
    path = _prepare(path)
    path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info(f"Wrote manifest {path}")
    return path


def read_manifest(path: PathLike) -> Manifest:
    try:
        return Manifest.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except ValidationError as e:
        raise DataError(f"{path} is not a valid manifest: {e}") from e


def write_config(config: ExperimentConfig, path: PathLike) -> Path:
    path = _prepare(path)
    path.write_text(config.model_dump_json(indent=2, exclude_none=True) + "\n", encoding="utf-8")
    return path


def write_instance(problem: Problem, path: PathLike, x0: Optional[np.ndarray] = None) -> Path:
    """Serialize a problem and optional starting point as a JSON instance document."""
    path = _prepare(path)
    doc = problem.to_instance(x0)
    path.write_text(doc.model_dump_json(indent=2, exclude_none=True) + "\n", encoding="utf-8")
    return path


def read_instance(path: PathLike) -> tuple[Problem, Optional[np.ndarray]]:
    try:
        doc = ProblemInstance.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except ValidationError as e:
        raise DataError(f"{path} is not a valid problem instance: {e}") from e
    return from_instance(doc)
