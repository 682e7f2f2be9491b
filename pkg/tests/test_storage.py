"""
Tests for CSV and JSON artifact storage.
"""

import json

import numpy as np
import pandas as pd
import pytest

from relative_descent.algorithms import TRACE_COLUMNS, relgd
from relative_descent.errors import DataError
from relative_descent.experiment import parse_config
from relative_descent.models import CheckReport, Manifest, RunRecord
from relative_descent.storage import (
    read_bounds,
    read_checks,
    read_instance,
    read_manifest,
    read_trace,
    trace_path,
    write_bounds,
    write_checks,
    write_config,
    write_instance,
    write_manifest,
    write_trace,
)


@pytest.fixture
def short_trace(quad_quartic_small):
    p, x0 = quad_quartic_small
    return relgd(p, x0, k=25, seed="7:0")


class TestTraces:
    """Test trace CSV files."""

    def test_roundtrip(self, short_trace, tmp_path):
        path = write_trace(short_trace, tmp_path / "traces" / "relgd_r00.csv")

        back = read_trace(path)

        assert back.method == "relgd"
        assert back.seed == "7:0"
        assert np.array_equal(back.t, short_trace.t)
        assert np.array_equal(back.f, short_trace.f)
        assert np.array_equal(back.stepsize, short_trace.stepsize, equal_nan=True)
        assert back.f_star == pytest.approx(0.0, abs=1e-12)

    def test_header(self, short_trace, tmp_path):
        path = write_trace(short_trace, tmp_path / "t.csv")

        assert path.read_text().splitlines()[0] == ",".join(TRACE_COLUMNS)

    def test_stride_keeps_last_row(self, short_trace, tmp_path):
        """Test stride 10 over 25 iterations keeps t = 0, 10, 20, 25."""
        path = write_trace(short_trace, tmp_path / "t.csv", stride=10)

        assert read_trace(path).t.tolist() == [0, 10, 20, 25]

    def test_rewrite_is_byte_identical(self, short_trace, tmp_path):
        first = write_trace(short_trace, tmp_path / "a.csv").read_bytes()
        second = write_trace(short_trace, tmp_path / "b.csv").read_bytes()

        assert first == second

    def test_wrong_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        pd.DataFrame({"iter": [0], "value": [1.0]}).to_csv(path, index=False)

        with pytest.raises(DataError):
            read_trace(path)

    def test_trace_path_layout(self, tmp_path):
        assert trace_path(tmp_path, "relrcd", 3) == tmp_path / "traces" / "relrcd_r03.csv"


class TestBounds:
    def test_roundtrip(self, tmp_path):
        frame = pd.DataFrame({"iter": [1, 2], "epoch": [1.0, 2.0], "weighted": [0.5, 0.25]})

        back = read_bounds(write_bounds(frame, tmp_path / "bounds" / "relgd.csv"))

        assert back["weighted"].tolist() == [0.5, 0.25]

    def test_leading_columns_required(self, tmp_path):
        with pytest.raises(DataError):
            write_bounds(pd.DataFrame({"k": [1], "weighted": [1.0]}), tmp_path / "b.csv")


class TestChecks:
    """Test check report CSV files."""

    def test_roundtrip_with_witness(self, tmp_path):
        reports = [
            CheckReport(name="eso", n_samples=8, worst_slack=0.1, tolerance=1e-9, passed=True, detail="exact"),
            CheckReport(
                name="relative_smoothness",
                n_samples=100,
                worst_slack=-3.5,
                tolerance=1e-9,
                passed=False,
                witness={"x": [1.0, 2.0], "y": [0.5, -1.0]},
                detail="L = 0.1",
            ),
        ]

        back = read_checks(write_checks(reports, tmp_path / "checks" / "checks.csv"))

        assert back == reports

    def test_malformed_witness(self, tmp_path):
        path = tmp_path / "checks.csv"
        pd.DataFrame(
            [{"name": "eso", "n_samples": 1, "worst_slack": 0.0, "tolerance": 0.0, "passed": True,
              "witness": "{not json", "detail": ""}]
        ).to_csv(path, index=False)

        with pytest.raises(DataError):
            read_checks(path)


class TestDocuments:
    """Test JSON manifests, configs and instances."""

    def test_manifest_roundtrip(self, tmp_path):
        manifest = Manifest(
            name="small",
            config_hash="abc",
            package_version="1.0.0",
            created_at="2024-01-01T00:00:00",
            base_seed=7,
            f_star=0.0,
            f_star_kind="exact",
            runs=[RunRecord(label="relgd", replicate=0, provenance="7:0", status="ok", iterations=20)],
        )

        back = read_manifest(write_manifest(manifest, tmp_path / "manifest.json"))

        assert back == manifest

    def test_invalid_manifest(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps({"name": "x"}))

        with pytest.raises(DataError):
            read_manifest(path)

    def test_config_written_as_json(self, small_config_dict, tmp_path):
        config = parse_config(small_config_dict)

        path = write_config(config, tmp_path / "config.json")

        assert json.loads(path.read_text())["experiment"]["name"] == "small"

    @pytest.mark.parametrize("fixture", ["quad_quartic_small", "poisson_small", "d_optimal_small"])
    def test_instance_roundtrip(self, fixture, request, tmp_path):
        p, x0 = request.getfixturevalue(fixture)

        q, y0 = read_instance(write_instance(p, tmp_path / "instance.json", x0))

        assert q.kind == p.kind
        assert np.array_equal(y0, x0)
        assert q.value(x0) == pytest.approx(p.value(x0), rel=1e-14)

    def test_invalid_instance(self, tmp_path):
        path = tmp_path / "instance.json"
        path.write_text(json.dumps({"kind": "lasso", "matrix": [[1.0]]}))

        with pytest.raises(DataError):
            read_instance(path)
