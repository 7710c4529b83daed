"""
Integration tests for pipeline module.
"""

import json

import numpy as np
import pytest

import pipeline
from errors import NumericalError
from pipeline import (
    run_dispersion_analysis,
    run_dos_analysis,
    run_kerr_analysis,
    run_rate_analysis,
    run_stirap_analysis,
    write_run_config,
)
from schemas import RunConfig
from utils import read_csv


def test_dos_analysis_writes_spectra_and_summary(out_dir):
    """DOS run writes both spectra, the summary and stack metadata."""
    result = run_dos_analysis(1.0, 2.0, 10, out_dir=out_dir, grid_points=2001, metadata={"run": "test"})
    assert result["success"] is True
    assert {p.split("/")[-1] for p in result["files"]} == {"dos.csv", "ldos.csv", "summary.json"}

    metadata, header, rows = read_csv(out_dir / "ldos.csv")
    assert header == ["omega", "value"]
    assert metadata["normalization"] == "low_frequency"
    assert metadata["run"] == "test"
    assert len(metadata["stack_hash"]) == 12
    assert len(rows) > 2001

    summary = result["summary"]
    double = summary["double_layers"]
    assert double["num_layers"] == 20
    assert summary["single_layers"]["num_layers"] == 10
    assert double["ldos_peak"]["omega"] < 0.7837
    by_norm = double["ldos_peak_by_normalization"]
    assert by_norm["low_frequency"] == pytest.approx(double["ldos_peak"]["rho"])
    assert by_norm["bulk"] == pytest.approx(2.0 * by_norm["vacuum"])

    grid_max = summary["dos_grid_max"]
    assert grid_max["rho"] <= double["dos_peak"]["rho"] * (1 + 1e-6)
    assert grid_max["rho"] == pytest.approx(double["dos_peak"]["rho"], rel=0.05)


def test_dos_analysis_of_index_matched_stack_is_flat(out_dir):
    """An index-matched stack gives a flat DOS file and a warning."""
    result = run_dos_analysis(1.0, 1.0, 10, out_dir=out_dir, grid_points=1001)
    assert result["success"] is True
    assert result["warnings"]
    _, _, rows = read_csv(out_dir / "dos.csv")
    values = np.array([float(row[1]) for row in rows])
    np.testing.assert_allclose(values, 1.0, atol=1e-9)


def test_dos_analysis_json_format(out_dir):
    """JSON output carries metadata and parallel omega/value arrays."""
    result = run_dos_analysis(1.0, 2.0, 5, emitter=None, out_dir=out_dir, fmt="json", grid_points=501)
    assert result["success"] is True
    data = json.loads((out_dir / "dos.json").read_text())
    assert data["metadata"]["kind"] == "dos"
    assert len(data["omega"]) == len(data["value"])
    assert not (out_dir / "ldos.json").exists()


def test_invalid_parameters_are_usage_errors():
    """Invalid parameters come back as usage failures with timing."""
    result = run_dos_analysis(1.0, 2.0, 0)
    assert result["success"] is False
    assert result["error_kind"] == "usage"
    assert "execution_time_seconds" in result


def test_unknown_normalization_is_usage_error():
    """An unknown LDOS normalization is a usage failure."""
    result = run_dos_analysis(1.0, 2.0, 5, normalization="peak")
    assert result["error_kind"] == "usage"


def test_dispersion_analysis(out_dir):
    """Dispersion run reports the gap width and writes the band table."""
    result = run_dispersion_analysis(1.0, 2.0, out_dir=out_dir, grid_points=4001)
    assert result["success"] is True
    assert result["summary"]["gap_width"] == pytest.approx(0.4326, abs=1e-4)
    _, header, _ = read_csv(out_dir / "dispersion.csv")
    assert header[0] == "omega"


def test_stirap_analysis_with_scan(out_dir):
    """STIRAP run transfers population and finds the best separation near tau."""
    result = run_stirap_analysis(tau=1.0, scan_points=8, out_dir=out_dir)
    assert result["success"] is True
    summary = result["summary"]
    assert summary["final_p2"] > 0.95
    assert summary["adiabaticity_satisfied"] is True
    assert 0.5 <= summary["best_separation_over_tau"] <= 2.0
    assert (out_dir / "trajectory.csv").exists()
    assert (out_dir / "separation_scan.json").exists()


def test_weak_pulses_are_flagged():
    """Pulses below the adiabatic area produce a warning."""
    result = run_stirap_analysis(tau=1.0, area=5.0)
    assert result["success"] is True
    assert any("adiabaticity" in warning for warning in result["warnings"])


def test_numerical_failure_is_reported(monkeypatch):
    """Integrator errors are reported as numerical failures."""
    def failing(*args, **kwargs):
        raise NumericalError("integrator diverged")

    monkeypatch.setattr(pipeline, "evolve", failing)
    result = run_stirap_analysis(tau=1.0)
    assert result["success"] is False
    assert result["error_kind"] == "numerical"
    assert "diverged" in result["error"]


def test_rate_analysis_with_stream(out_dir):
    """Rate run reports the enhanced rate and writes one event per cycle."""
    result = run_rate_analysis(num_periods=29, cycles=2000, seed=7, out_dir=out_dir)
    assert result["success"] is True
    report = result["summary"]["report"]
    assert 0.8e5 <= report["enhanced_rate"] <= 1.4e5
    assert result["summary"]["device_limited_by"] == "decay"
    metadata, header, rows = read_csv(out_dir / "events.csv")
    assert header == ["cycle", "trigger_time", "emission_time"]
    assert metadata["seed"] == 7
    assert len(rows) == 2000
    assert any(row[2] == "" for row in rows)


def test_rate_analysis_rejects_certain_emission():
    """A target probability of 1 is a usage failure."""
    result = run_rate_analysis(num_periods=5, target=1.0)
    assert result["error_kind"] == "usage"


@pytest.mark.slow
def test_kerr_analysis(out_dir):
    """Kerr run finds a relative index change of a few 1e-3."""
    result = run_kerr_analysis(sweep_points=5, out_dir=out_dir)
    assert result["success"] is True
    assert 3e-3 <= abs(result["summary"]["result"]["delta_n_over_n"]) <= 1.2e-2
    _, header, rows = read_csv(out_dir / "kerr_sweep.csv")
    values = [float(row[1]) for row in rows]
    assert header == ["delta_n", "ldos"]
    assert values == sorted(values)


def test_run_config_echo(out_dir):
    """The resolved run configuration is written to run.json."""
    path = write_run_config(RunConfig(subcommand="dos", out_dir=str(out_dir), params={"n_low": 1.0}))
    data = json.loads(path.read_text())
    assert data["subcommand"] == "dos"
    assert data["params"] == {"n_low": 1.0}
