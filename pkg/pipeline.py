"""
Analysis pipeline for the photon gun simulator.
Orchestrates stack construction, spectra, STIRAP, rate and Kerr analyses and
writes their CSV/JSON outputs. Pipeline functions never raise: failures come
back as result dicts with success=False and an error_kind of "usage" or
"numerical".
"""

import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import ValidationError

from config import Config
from emitter import (
    expected_emitted_fraction,
    jitter_stats,
    line_spectrum,
    periods_for_rate,
    photon_stream,
    physical_scale,
    rate_report,
    tune_to_peak,
)
from errors import InvalidParameterError, NumericalError
from kerr import required_shift, shift_sweep
from logger import logger
from schemas import EmitterModel, PulsePair, QuarterWaveSpec, RunConfig, SwitchCriterion, ThreeLevelSystem
from spectra import LDOS_NORMALIZATIONS, band_edge_peak, dispersion, dos, ldos_scale, local_dos
from stack import build_layer_count_stack, build_quarter_wave, place_emitter_midstack, stack_hash, stack_to_json
from stirap import adiabaticity_check, best_separation, evolve, separation_scan
from utils import safe_json_dumps, write_csv, write_json

EmitterFrequency = Union[str, float]


def _failure(name: str, exc: Exception, start_time: float, **extra) -> Dict:
    kind = "usage" if isinstance(exc, (InvalidParameterError, ValidationError)) else "numerical"
    if kind == "usage":
        logger.warning(f"{name}: invalid parameters: {exc}")
    else:
        logger.error(f"Error in {name}: {str(exc)}", exc_info=True)
    return {
        "success": False,
        "error": str(exc),
        "error_kind": kind,
        "execution_time_seconds": time.time() - start_time,
        **extra,
    }


def _finish(name: str, summary: Dict, files: List[Path], warnings: List[str], start_time: float) -> Dict:
    execution_time = time.time() - start_time
    logger.info(f"{name} completed in {execution_time:.2f}s")
    return {
        "success": True,
        "summary": summary,
        "files": [str(path) for path in files],
        "warnings": warnings,
        "execution_time_seconds": execution_time,
    }


def _spectrum_file(out_dir: Path, stem: str, fmt: str, spectrum, metadata: Dict) -> Path:
    metadata = {**metadata, "kind": spectrum.kind, "normalization": spectrum.normalization,
                "stack_hash": spectrum.stack_id}
    if fmt == "json":
        return write_json(out_dir / f"{stem}.json", {
            "metadata": metadata,
            "omega": spectrum.frequencies,
            "value": spectrum.values,
        })
    return write_csv(out_dir / f"{stem}.csv", ("omega", "value"),
                     zip(spectrum.frequencies, spectrum.values), metadata)


def _peak_or_none(stack, kind: str, normalization: str, warnings: List[str]) -> Optional[Dict[str, float]]:
    try:
        omega, rho = band_edge_peak(stack, kind=kind, normalization=normalization)
        return {"omega": omega, "rho": rho}
    except (NumericalError, InvalidParameterError) as e:
        warnings.append(f"{kind}: {e}")
        return None


def _stack_summary(stack, normalization: str, warnings: List[str]) -> Dict[str, Any]:
    summary: Dict[str, Any] = {
        "num_layers": len(stack.layers),
        "stack_hash": stack_hash(stack),
        "dos_peak": _peak_or_none(stack, "dos", normalization, warnings),
    }
    if stack.emitter_anchor is not None:
        summary["emitter_anchor"] = stack.emitter_anchor.model_dump()
        peak = _peak_or_none(stack, "local_dos", normalization, warnings)
        summary["ldos_peak"] = peak
        if peak is not None:
            # Same peak expressed in every normalization
            base = ldos_scale(stack, normalization)
            summary["ldos_peak_by_normalization"] = {
                name: peak["rho"] * ldos_scale(stack, name) / base for name in LDOS_NORMALIZATIONS
            }
    return summary


def run_dos_analysis(
    n_low: float,
    n_high: float,
    num_periods: int,
    emitter: Optional[str] = "mid",
    normalization: str = "low_frequency",
    out_dir: Optional[Path] = None,
    fmt: str = "csv",
    grid_points: int = Config.GRID_POINTS,
    metadata: Optional[Dict] = None,
) -> Dict:
    """
    DOS and LDOS spectra of a quarter-wave stack plus peak summary.

    Both readings of the period count are reported: N double layers (the
    spectra written to disk) and N single layers.

    Args:
        n_low: Low refractive index
        n_high: High refractive index
        num_periods: Number of double layers
        emitter: "mid" to anchor an emitter mid-stack, None for no LDOS
        normalization: LDOS normalization
        out_dir: Output directory (no files when None)
        fmt: "csv" or "json"
        grid_points: Base grid size before peak refinement
        metadata: Configuration echoed into every file

    Returns:
        Result dictionary with summary, files and warnings
    """
    start_time = time.time()
    warnings: List[str] = []
    files: List[Path] = []
    metadata = metadata or {}
    try:
        if normalization not in LDOS_NORMALIZATIONS:
            raise InvalidParameterError(f"unknown LDOS normalization: {normalization}")
        spec = QuarterWaveSpec(n_low=n_low, n_high=n_high, num_periods=num_periods)
        stack = build_quarter_wave(spec)
        layer_count = build_layer_count_stack(n_low, n_high, num_periods)
        if emitter == "mid":
            stack = place_emitter_midstack(stack)
            layer_count = place_emitter_midstack(layer_count)

        grid = np.linspace(0.0, Config.GRID_MAX, grid_points + 2)[1:-1]
        logger.info(f"DOS analysis: n=({n_low}, {n_high}), N={num_periods}, {grid_points} grid points")
        dos_spectrum = dos(stack, grid, refine=True)
        ldos_spectrum = local_dos(stack, grid, normalization, refine=True) if emitter == "mid" else None

        summary = {
            "n_low": n_low,
            "n_high": n_high,
            "num_periods": num_periods,
            "normalization": normalization,
            "stack": stack_to_json(stack),
            "double_layers": _stack_summary(stack, normalization, warnings),
            "single_layers": _stack_summary(layer_count, normalization, warnings),
        }
        omega_max, rho_max = dos_spectrum.peak()
        summary["dos_grid_max"] = {"omega": omega_max, "rho": rho_max}

        if out_dir is not None:
            out_dir = Path(out_dir)
            files.append(_spectrum_file(out_dir, "dos", fmt, dos_spectrum, metadata))
            if ldos_spectrum is not None:
                files.append(_spectrum_file(out_dir, "ldos", fmt, ldos_spectrum, metadata))
            files.append(write_json(out_dir / "summary.json", {"config": metadata, "summary": summary}))
        return _finish("run_dos_analysis", summary, files, warnings, start_time)
    except Exception as e:
        return _failure("run_dos_analysis", e, start_time)


def run_dispersion_analysis(
    n_low: float,
    n_high: float,
    out_dir: Optional[Path] = None,
    fmt: str = "csv",
    grid_points: int = Config.GRID_POINTS,
    metadata: Optional[Dict] = None,
) -> Dict:
    """Infinite-crystal band structure: band edges, gaps, Bloch phase and group velocity."""
    start_time = time.time()
    warnings: List[str] = []
    files: List[Path] = []
    metadata = metadata or {}
    try:
        result = dispersion(n_low, n_high, points=grid_points)
        if not result.gaps:
            warnings.append("no band gap: indices are equal")
        summary = {
            "n_low": n_low,
            "n_high": n_high,
            "band_edges": result.band_edges,
            "gaps": [list(gap) for gap in result.gaps],
            "lower_gap_edge": result.lower_gap_edge,
            "upper_gap_edge": result.upper_gap_edge,
            "gap_width": result.gap_width,
        }
        if out_dir is not None:
            out_dir = Path(out_dir)
            columns = ("omega", "cos_bloch", "bloch_phase_re", "bloch_phase_im", "group_velocity")
            rows = zip(result.frequencies, result.cos_bloch, result.bloch_phase.real,
                       result.bloch_phase.imag, result.group_velocity)
            if fmt == "json":
                files.append(write_json(out_dir / "dispersion.json", {
                    "metadata": metadata,
                    **{name: list(column) for name, column in zip(columns, zip(*rows))},
                }))
            else:
                files.append(write_csv(out_dir / "dispersion.csv", columns, rows, metadata))
            files.append(write_json(out_dir / "summary.json", {"config": metadata, "summary": summary}))
        return _finish("run_dispersion_analysis", summary, files, warnings, start_time)
    except Exception as e:
        return _failure("run_dispersion_analysis", e, start_time)


def run_stirap_analysis(
    tau: float,
    area: float = 20.0,
    separation: Optional[float] = None,
    gamma3: Optional[float] = None,
    branching_ratio: float = Config.ER_BRANCHING_RATIO,
    detuning: float = 0.0,
    gamma2: float = 0.0,
    ordering: str = "counterintuitive",
    omega13: Optional[float] = None,
    omega23: Optional[float] = None,
    tol: float = Config.STIRAP_TOL,
    scan_points: int = 0,
    out_dir: Optional[Path] = None,
    fmt: str = "csv",
    metadata: Optional[Dict] = None,
) -> Dict:
    """
    STIRAP trajectory and optional separation scan over [0.2 tau, 3 tau].

    Peaks default to equal Rabi frequencies with adiabaticity `area`;
    separation defaults to tau and gamma3 to 1/tau.
    """
    start_time = time.time()
    warnings: List[str] = []
    files: List[Path] = []
    metadata = metadata or {}
    try:
        separation = tau if separation is None else separation
        gamma3 = 1.0 / tau if gamma3 is None else gamma3
        system = ThreeLevelSystem(gamma3=gamma3, branching_ratio=branching_ratio, detuning=detuning, gamma2=gamma2)
        if omega13 is not None or omega23 is not None:
            pair = PulsePair(
                omega13_peak=omega13 if omega13 is not None else 0.0,
                omega23_peak=omega23 if omega23 is not None else 0.0,
                tau=tau, separation=separation, ordering=ordering,
            )
        else:
            pair = PulsePair.from_adiabaticity(area, tau, separation, ordering)

        adiabaticity, satisfied = adiabaticity_check(pair)
        if not satisfied:
            warnings.append(f"adiabaticity condition not met: A={adiabaticity:.3g} <= {Config.ADIABATICITY_THRESHOLD}")

        trajectory = evolve(system, pair, tol=tol)
        summary: Dict[str, Any] = {
            "pulse_pair": pair.model_dump(),
            "system": system.model_dump(),
            "adiabaticity": adiabaticity,
            "adiabaticity_satisfied": satisfied,
            "final_p1": float(trajectory.p1[-1]),
            "final_p2": trajectory.final_p2,
            "final_p3": float(trajectory.p3[-1]),
            "final_loss": trajectory.final_loss,
            "tol": tol,
        }

        scan = None
        if scan_points > 0:
            separations = np.linspace(0.2 * tau, 3.0 * tau, scan_points)
            scan = separation_scan(system, adiabaticity, tau, separations, ordering, tol)
            best_s, best_p2 = best_separation(scan)
            summary["best_separation"] = best_s
            summary["best_separation_over_tau"] = best_s / tau
            summary["best_efficiency"] = best_p2

        if out_dir is not None:
            out_dir = Path(out_dir)
            columns = ("t", "p1", "p2", "p3", "loss", "dark_overlap")
            if fmt == "json":
                files.append(write_json(out_dir / "trajectory.json", {
                    "metadata": metadata,
                    **{name: list(column) for name, column in zip(columns, zip(*trajectory.rows()))},
                }))
            else:
                files.append(write_csv(out_dir / "trajectory.csv", columns, trajectory.rows(), metadata))
            if scan is not None:
                files.append(write_json(out_dir / "separation_scan.json", {
                    "metadata": metadata,
                    "separation": [s for s, _ in scan],
                    "efficiency": [p for _, p in scan],
                }))
            files.append(write_json(out_dir / "summary.json", {"config": metadata, "summary": summary}))
        return _finish("run_stirap_analysis", summary, files, warnings, start_time)
    except Exception as e:
        return _failure("run_stirap_analysis", e, start_time)


def run_rate_analysis(
    n_low: float = 1.0,
    n_high: float = 2.0,
    num_periods: int = 29,
    emitter_frequency: EmitterFrequency = "peak",
    lifetime: float = Config.EMITTER_LIFETIME_S,
    linewidth: float = Config.EMITTER_LINEWIDTH,
    pump_rep_rate: float = Config.PUMP_REP_RATE_HZ,
    target: float = Config.EMISSION_TARGET,
    stirap_duration: float = 0.0,
    cycles: int = 0,
    seed: int = 0,
    mhz_periods: bool = False,
    out_dir: Optional[Path] = None,
    fmt: str = "csv",
    metadata: Optional[Dict] = None,
) -> Dict:
    """
    Enhanced decay rate, device repetition rate and optional photon stream
    for a mid-stack emitter.

    Args:
        emitter_frequency: "peak" tunes w_A to the band-edge LDOS peak,
            a number fixes it
        cycles: Photon-stream length (0 skips the Monte Carlo stream)
        mhz_periods: Also search the period count needed for a 1 MHz rate
    """
    start_time = time.time()
    warnings: List[str] = []
    files: List[Path] = []
    metadata = metadata or {}
    try:
        stack = place_emitter_midstack(build_quarter_wave(
            QuarterWaveSpec(n_low=n_low, n_high=n_high, num_periods=num_periods)
        ))
        model = EmitterModel(bulk_lifetime=lifetime, linewidth=linewidth)
        if emitter_frequency == "peak":
            model = tune_to_peak(stack, model)
        else:
            model = model.model_copy(update={"transition_frequency": float(emitter_frequency)})
        # Validate the copy (model_copy skips validation)
        model = EmitterModel(**model.model_dump())

        report = rate_report(line_spectrum(stack, model), model, pump_rep_rate, target, stirap_duration)
        summary: Dict[str, Any] = {
            "stack_hash": stack_hash(stack),
            "emitter": model.model_dump(),
            "report": report.model_dump(),
            "device_limited_by": "pump" if report.device_rep_rate >= pump_rep_rate else "decay",
            "physical_scale": physical_scale(model, n_low, n_high),
        }

        if mhz_periods:
            try:
                n_needed, rate = periods_for_rate(n_low, n_high, 1e6, model)
                summary["periods_for_1mhz"] = {"num_periods": n_needed, "enhanced_rate": rate}
            except NumericalError as e:
                warnings.append(f"1 MHz not reached: {e}")
                summary["periods_for_1mhz"] = None

        events = []
        if cycles > 0:
            events = photon_stream(report, cycles, seed)
            summary["expected_emitted_fraction"] = expected_emitted_fraction(report)
            try:
                mean_delay, std_delay, fraction = jitter_stats(events)
                summary["jitter"] = {"mean_delay": mean_delay, "std_delay": std_delay, "emitted_fraction": fraction}
            except InvalidParameterError:
                warnings.append("no cycle emitted a photon")
                summary["jitter"] = None

        if out_dir is not None:
            out_dir = Path(out_dir)
            files.append(write_json(out_dir / "rate.json", {"config": metadata, **summary}))
            if events:
                rows = ((e.cycle_index, e.trigger_time, e.emission_time) for e in events)
                if fmt == "json":
                    files.append(write_json(out_dir / "events.json", {
                        "metadata": metadata,
                        "events": [e.model_dump() for e in events],
                    }))
                else:
                    files.append(write_csv(out_dir / "events.csv", ("cycle", "trigger_time", "emission_time"),
                                           rows, {**metadata, "seed": seed}))
        return _finish("run_rate_analysis", summary, files, warnings, start_time)
    except Exception as e:
        return _failure("run_rate_analysis", e, start_time)


def run_kerr_analysis(
    n_low: float = 1.0,
    n_high: float = 2.0,
    num_periods: int = Config.KERR_PERIODS,
    which: str = "high",
    off_threshold: float = Config.KERR_OFF_THRESHOLD,
    on_threshold: Optional[float] = None,
    on_fraction: float = Config.KERR_ON_FRACTION,
    emitter_frequency: Optional[float] = None,
    linewidth: float = Config.EMITTER_LINEWIDTH,
    sweep_points: int = 21,
    out_dir: Optional[Path] = None,
    fmt: str = "csv",
    metadata: Optional[Dict] = None,
) -> Dict:
    """Required Kerr index change and the LDOS-versus-dn curve up to it."""
    start_time = time.time()
    warnings: List[str] = []
    files: List[Path] = []
    metadata = metadata or {}
    try:
        criterion = SwitchCriterion(off_threshold=off_threshold, on_threshold=on_threshold, on_fraction=on_fraction)
        spec = QuarterWaveSpec(n_low=n_low, n_high=n_high, num_periods=num_periods)
        model = EmitterModel(linewidth=linewidth)
        if emitter_frequency is not None:
            model = EmitterModel(transition_frequency=emitter_frequency, linewidth=linewidth)
            result = required_shift(spec, model, criterion, which)
        else:
            result = required_shift(spec, None, criterion, which)
            model = EmitterModel(transition_frequency=result.emitter_frequency, linewidth=linewidth)

        summary = {"stack_hash": stack_hash(build_quarter_wave(spec)), "result": result.model_dump()}
        sweep = []
        if sweep_points > 1:
            stack = place_emitter_midstack(build_quarter_wave(spec))
            deltas = np.linspace(0.0, result.delta_n_required, sweep_points)
            sweep = shift_sweep(stack, model, deltas, which)

        if out_dir is not None:
            out_dir = Path(out_dir)
            files.append(write_json(out_dir / "kerr.json", {"config": metadata, **summary}))
            if sweep:
                if fmt == "json":
                    files.append(write_json(out_dir / "kerr_sweep.json", {
                        "metadata": metadata,
                        "delta_n": [d for d, _ in sweep],
                        "ldos": [v for _, v in sweep],
                    }))
                else:
                    files.append(write_csv(out_dir / "kerr_sweep.csv", ("delta_n", "ldos"), sweep, metadata))
        return _finish("run_kerr_analysis", summary, files, warnings, start_time)
    except Exception as e:
        return _failure("run_kerr_analysis", e, start_time)


def write_run_config(run_config: RunConfig) -> Path:
    """Echo the resolved configuration as run.json in the output directory."""
    path = Path(run_config.out_dir) / "run.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(safe_json_dumps(run_config.model_dump()) + "\n", encoding="utf-8")
    return path
