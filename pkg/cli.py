"""
Command-line front end for the photon gun simulator.

    python cli.py dos --n1 1 --n2 2 --periods 29 --emitter mid --out runs/dos
    python cli.py stirap --tau 1 --scan-points 15
    python cli.py rate --cycles 100000 --seed 7
    python cli.py kerr
    python cli.py --workers 4 --log-level INFO stirap --tau 1 --scan-points 40

Exit codes: 0 success, 1 numerical failure, 2 invalid parameters.
"""

from pathlib import Path
from typing import Callable, Dict

import click

from config import Config
from logger import logger, set_log_level
from pipeline import (
    run_dispersion_analysis,
    run_dos_analysis,
    run_kerr_analysis,
    run_rate_analysis,
    run_stirap_analysis,
    write_run_config,
)
from schemas import RunConfig
from utils import safe_json_dumps

POSITIVE = click.FloatRange(min=0.0, min_open=True)
INDEX = click.FloatRange(min=1.0)
LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]


class EmitterFrequencyType(click.ParamType):
    """'peak' or a positive dimensionless frequency."""
    name = "peak|FLOAT"

    def convert(self, value, param, ctx):
        if isinstance(value, float) or value == "peak":
            return value
        try:
            number = float(value)
        except ValueError:
            self.fail(f"{value!r} is neither 'peak' nor a number", param, ctx)
        if number <= 0:
            self.fail("emitter frequency must be positive", param, ctx)
        return number


def common_options(func):
    func = click.option("--seed", type=int, default=0, show_default=True, help="Random seed.")(func)
    func = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
                        show_default=True, help="Data file format.")(func)
    func = click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path),
                        default=Path("out"), show_default=True, help="Output directory.")(func)
    return func


def _execute(subcommand: str, out_dir: Path, fmt: str, seed: int, params: Dict, runner: Callable[..., Dict]):
    run_config = RunConfig(subcommand=subcommand, out_dir=str(out_dir), seed=seed, format=fmt, params=params)
    write_run_config(run_config)
    metadata = run_config.model_dump()
    result = runner(out_dir=out_dir, fmt=fmt, metadata=metadata, **params)

    if not result["success"]:
        if result["error_kind"] == "usage":
            raise click.UsageError(result["error"])
        click.echo(f"Error: {result['error']}", err=True)
        raise SystemExit(1)

    for warning in result["warnings"]:
        click.echo(f"Warning: {warning}", err=True)
    click.echo(safe_json_dumps(result["summary"]))
    logger.info(f"{subcommand}: wrote {len(result['files']) + 1} files to {out_dir}")


@click.group()
@click.version_option(Config.VERSION)
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True,
              help="Worker processes for parameter scans. Results do not depend on it.")
@click.option("--log-level", type=click.Choice(LOG_LEVELS, case_sensitive=False), default=None,
              help="Console log level [default: PHOTON_GUN_LOG_LEVEL or WARNING].")
def cli(workers, log_level):
    """Band-edge single-photon gun simulator."""
    Config.SWEEP_WORKERS = workers
    if log_level is not None:
        set_log_level(log_level)


@cli.command("dos")
@click.option("--n1", type=INDEX, default=1.0, show_default=True, help="Low refractive index.")
@click.option("--n2", type=INDEX, default=2.0, show_default=True, help="High refractive index.")
@click.option("--periods", type=click.IntRange(min=1), default=29, show_default=True, help="Double layers N.")
@click.option("--emitter", type=click.Choice(["mid", "none"]), default="mid", show_default=True)
@click.option("--normalization", type=click.Choice(["low_frequency", "vacuum", "bulk"]),
              default="low_frequency", show_default=True)
@click.option("--points", type=click.IntRange(min=3), default=Config.GRID_POINTS, show_default=True)
@common_options
def cmd_dos(n1, n2, periods, emitter, normalization, points, out_dir, fmt, seed):
    """DOS and emitter-position LDOS spectra with band-edge peak summary."""
    params = {
        "n_low": n1, "n_high": n2, "num_periods": periods,
        "emitter": None if emitter == "none" else emitter,
        "normalization": normalization, "grid_points": points,
    }
    _execute("dos", out_dir, fmt, seed, params, run_dos_analysis)


@cli.command("dispersion")
@click.option("--n1", type=INDEX, default=1.0, show_default=True)
@click.option("--n2", type=INDEX, default=2.0, show_default=True)
@click.option("--points", type=click.IntRange(min=3), default=Config.GRID_POINTS, show_default=True)
@common_options
def cmd_dispersion(n1, n2, points, out_dir, fmt, seed):
    """Infinite-crystal Bloch dispersion, band edges and gap width."""
    params = {"n_low": n1, "n_high": n2, "grid_points": points}
    _execute("dispersion", out_dir, fmt, seed, params, run_dispersion_analysis)


@cli.command("stirap")
@click.option("--tau", type=POSITIVE, required=True, help="Common Gaussian pulse width.")
@click.option("--area", type=click.FloatRange(min=0.0), default=20.0, show_default=True,
              help="Adiabaticity tau*sqrt(W13^2 + W23^2) for equal peaks.")
@click.option("--separation", type=click.FloatRange(min=0.0), default=None, help="Peak separation [default: tau].")
@click.option("--gamma3", type=click.FloatRange(min=0.0), default=None, help="Decay rate of |3> [default: 1/tau].")
@click.option("--branching-ratio", type=POSITIVE, default=Config.ER_BRANCHING_RATIO, show_default=True)
@click.option("--detuning", type=float, default=0.0, show_default=True)
@click.option("--gamma2", type=click.FloatRange(min=0.0), default=0.0, show_default=True)
@click.option("--ordering", type=click.Choice(["counterintuitive", "intuitive"]),
              default="counterintuitive", show_default=True)
@click.option("--omega13", type=click.FloatRange(min=0.0), default=None, help="Explicit pump peak.")
@click.option("--omega23", type=click.FloatRange(min=0.0), default=None, help="Explicit Stokes peak.")
@click.option("--tol", type=POSITIVE, default=Config.STIRAP_TOL, show_default=True)
@click.option("--scan-points", type=click.IntRange(min=0), default=0, show_default=True,
              help="Separation scan over [0.2 tau, 3 tau] (0 disables).")
@common_options
def cmd_stirap(tau, area, separation, gamma3, branching_ratio, detuning, gamma2, ordering,
               omega13, omega23, tol, scan_points, out_dir, fmt, seed):
    """STIRAP population transfer with a decaying intermediate level."""
    params = {
        "tau": tau, "area": area, "separation": separation, "gamma3": gamma3,
        "branching_ratio": branching_ratio, "detuning": detuning, "gamma2": gamma2,
        "ordering": ordering, "omega13": omega13, "omega23": omega23, "tol": tol,
        "scan_points": scan_points,
    }
    _execute("stirap", out_dir, fmt, seed, params, run_stirap_analysis)


@cli.command("rate")
@click.option("--n1", type=INDEX, default=1.0, show_default=True)
@click.option("--n2", type=INDEX, default=2.0, show_default=True)
@click.option("--periods", type=click.IntRange(min=1), default=29, show_default=True)
@click.option("--emitter-frequency", type=EmitterFrequencyType(), default="peak", show_default=True)
@click.option("--lifetime", type=POSITIVE, default=Config.EMITTER_LIFETIME_S, show_default=True,
              help="Bulk lifetime in seconds.")
@click.option("--linewidth", type=POSITIVE, default=Config.EMITTER_LINEWIDTH, show_default=True)
@click.option("--pump-rate", type=POSITIVE, default=Config.PUMP_REP_RATE_HZ, show_default=True)
@click.option("--target", type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True),
              default=Config.EMISSION_TARGET, show_default=True, help="Per-cycle emission probability.")
@click.option("--stirap-duration", type=click.FloatRange(min=0.0), default=0.0, show_default=True)
@click.option("--cycles", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--mhz-periods", is_flag=True, help="Search the period count reaching 1 MHz.")
@common_options
def cmd_rate(n1, n2, periods, emitter_frequency, lifetime, linewidth, pump_rate, target,
             stirap_duration, cycles, mhz_periods, out_dir, fmt, seed):
    """Enhanced decay rate, repetition rate and photon event stream."""
    params = {
        "n_low": n1, "n_high": n2, "num_periods": periods, "emitter_frequency": emitter_frequency,
        "lifetime": lifetime, "linewidth": linewidth, "pump_rep_rate": pump_rate, "target": target,
        "stirap_duration": stirap_duration, "cycles": cycles, "seed": seed, "mhz_periods": mhz_periods,
    }
    _execute("rate", out_dir, fmt, seed, params, run_rate_analysis)


@cli.command("kerr")
@click.option("--n1", type=INDEX, default=1.0, show_default=True)
@click.option("--n2", type=INDEX, default=2.0, show_default=True)
@click.option("--periods", type=click.IntRange(min=1), default=Config.KERR_PERIODS, show_default=True)
@click.option("--layers", "which", type=click.Choice(["high", "low", "all"]), default="high", show_default=True)
@click.option("--off-threshold", type=POSITIVE, default=Config.KERR_OFF_THRESHOLD, show_default=True)
@click.option("--on-threshold", type=POSITIVE, default=None, help="[default: on-fraction x unshifted peak]")
@click.option("--on-fraction", type=click.FloatRange(0.0, 1.0, min_open=True), default=Config.KERR_ON_FRACTION,
              show_default=True)
@click.option("--emitter-frequency", type=POSITIVE, default=None,
              help="[default: one linewidth beyond the OFF edge]")
@click.option("--linewidth", type=POSITIVE, default=Config.EMITTER_LINEWIDTH, show_default=True)
@click.option("--sweep-points", type=click.IntRange(min=0), default=21, show_default=True)
@common_options
def cmd_kerr(n1, n2, periods, which, off_threshold, on_threshold, on_fraction, emitter_frequency,
             linewidth, sweep_points, out_dir, fmt, seed):
    """Index change needed to switch the emitter from OFF to ON."""
    if on_threshold is not None and off_threshold >= on_threshold:
        raise click.BadParameter("must be above --off-threshold", param_hint="--on-threshold")
    params = {
        "n_low": n1, "n_high": n2, "num_periods": periods, "which": which,
        "off_threshold": off_threshold, "on_threshold": on_threshold, "on_fraction": on_fraction,
        "emitter_frequency": emitter_frequency, "linewidth": linewidth, "sweep_points": sweep_points,
    }
    _execute("kerr", out_dir, fmt, seed, params, run_kerr_analysis)


main = cli

if __name__ == "__main__":
    cli()
