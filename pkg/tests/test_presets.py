"""
End-to-end runs of the built-in benchmark configs.
"""

import numpy as np
import pytest

from relative_descent.errors import ConfigError
from relative_descent.experiment import run_experiment
from relative_descent.presets import PRESETS, get_preset
from relative_descent.storage import read_trace


def _traces(out, manifest, label):
    return [read_trace(out / run.trace_file) for run in manifest.runs if run.label == label and run.trace_file]


def _gap_at_epoch(trace, epoch):
    return float(trace.gap[np.searchsorted(trace.epoch, epoch - 1e-9)])


def _median_gaps(traces, epochs):
    return np.array([np.median([_gap_at_epoch(trace, e) for trace in traces]) for e in epochs])


def _finished(out, manifest, label, epochs):
    """Traces of one label that reached the given epoch; most of the replicates must."""
    traces = [trace for trace in _traces(out, manifest, label) if trace.epoch[-1] >= epochs - 1e-9]
    assert len(traces) >= 8
    return traces


class TestPresetConfigs:
    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_presets_validate(self, name):
        config = get_preset(name)

        assert config.experiment.name == name
        assert config.experiment.replicates == 10

    def test_unknown(self):
        with pytest.raises(ConfigError):
            get_preset("figure3")


@pytest.mark.slow
class TestPresetRuns:
    """Full preset runs; slow."""

    def test_quad_quartic_comparison(self, tmp_path):
        """Test GD trails relGD by 10x at epoch 50 and relRCD keeps pace with relGD from epoch 20.

        With the certified ESO vector (all ones for serial sampling) relRCD takes
        relGD's stepsize one coordinate at a time, so it stays within a constant
        factor of relGD rather than below it.
        """
        out = tmp_path / "figure1"

        manifest = run_experiment(get_preset("figure1"), out, workers=2, progress=False)

        assert len(manifest.runs) == 30
        assert all(run.status == "ok" for run in manifest.runs)
        assert manifest.f_star_kind == "exact"
        assert manifest.eso_max_v["relrcd"] == pytest.approx(1.0)
        gd = _traces(out, manifest, "gd")
        relgd = _traces(out, manifest, "relgd")
        relrcd = _traces(out, manifest, "relrcd")
        initial = relgd[0].gap[0]
        for g, r, c in zip(gd, relgd, relrcd):
            assert r.gap[-1] <= 1e-6 * initial
            assert c.gap[-1] <= 1e-6 * initial
            assert c.epoch[-1] == pytest.approx(50.0)

        epochs = np.arange(20, 51)
        gd_median = _median_gaps(gd, epochs)
        relgd_median = _median_gaps(relgd, epochs)
        relrcd_median = _median_gaps(relrcd, epochs)
        assert gd_median[-1] >= 10.0 * relgd_median[-1]
        assert np.all(relrcd_median <= 5.0 * relgd_median)
        assert np.all(np.diff(relrcd_median) <= 1e-12)
        assert relrcd_median[-1] <= 0.1 * relrcd_median[0]
        assert {"gd", "relgd", "relrcd"} <= {path.stem for path in (out / "bounds").glob("*.csv")}

    def test_poisson_comparison(self, tmp_path):
        """Test Constant(L) stalls over epochs 80-100 while the sqrt schedule keeps decreasing."""
        out = tmp_path / "figure2"

        manifest = run_experiment(get_preset("figure2"), out, workers=2, progress=False)

        assert len(manifest.runs) == 50
        assert {run.status for run in manifest.runs} <= {"ok", "aborted"}
        assert manifest.f_star_kind == "reference"
        assert set(manifest.sigma2) == {"relsgd_constant", "relsgd_constant_large", "relsgd_linear", "relsgd_sqrt"}
        for trace in _traces(out, manifest, "relgd"):
            assert np.all(trace.gap >= -1e-12 * np.abs(trace.f))
            assert trace.gap[-1] < _gap_at_epoch(trace, 1.0)

        window = np.array([80.0, 100.0])
        constant = _median_gaps(_finished(out, manifest, "relsgd_constant", 100.0), window)
        sqrt = _median_gaps(_finished(out, manifest, "relsgd_sqrt", 100.0), window)
        assert constant[1] > 0.95 * constant[0]
        assert sqrt[1] < 0.95 * sqrt[0]
        assert sqrt[1] < constant[1]
