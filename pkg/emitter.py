"""
Coupling of the photonic LDOS to the Er3+ transition: line-averaged
enhancement, decay and repetition rates, and a seeded trigger/photon event
stream.
"""

import math
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.integrate import trapezoid

from config import Config
from errors import InvalidParameterError, NumericalError
from logger import logger
from schemas import EmitterModel, PhotonEventRecord, QuarterWaveSpec, RateReport, Stack
from spectra import DosSpectrum, band_edge_peak, local_dos
from stack import build_quarter_wave, place_emitter_midstack, quarter_wave_thickness
from sweeps import run_sweep


def line_window(emitter: EmitterModel, points: int = Config.LINE_QUADRATURE_POINTS) -> np.ndarray:
    """Quadrature grid over w_A +/- 3 linewidths."""
    half = Config.LINE_WINDOW_WIDTHS * emitter.linewidth
    return np.linspace(emitter.transition_frequency - half, emitter.transition_frequency + half, points)


def _lorentzian(omega: np.ndarray, center: float, fwhm: float) -> np.ndarray:
    half = fwhm / 2.0
    return (half / math.pi) / ((omega - center) ** 2 + half ** 2)


def enhancement_at_line(spectrum: DosSpectrum, emitter: EmitterModel) -> float:
    """
    Average the spectrum over the emitter's Lorentzian line.

    The Lorentzian (FWHM = linewidth) is truncated to w_A +/- 3 linewidths and
    renormalized there, so a constant spectrum returns that constant.

    Args:
        spectrum: LDOS (or DOS) covering the line window
        emitter: Emitter model

    Returns:
        Line-averaged enhancement

    Raises:
        InvalidParameterError: spectrum does not cover the window
    """
    window = line_window(emitter)
    if spectrum.frequencies[0] > window[0] or spectrum.frequencies[-1] < window[-1]:
        raise InvalidParameterError(
            f"spectrum [{spectrum.frequencies[0]:.6g}, {spectrum.frequencies[-1]:.6g}] does not cover "
            f"the emitter line window [{window[0]:.6g}, {window[-1]:.6g}]"
        )
    values = np.interp(window, spectrum.frequencies, spectrum.values)
    weights = _lorentzian(window, emitter.transition_frequency, emitter.linewidth)
    return float(trapezoid(values * weights, window) / trapezoid(weights, window))


def line_spectrum(stack: Stack, emitter: EmitterModel, normalization: str = "low_frequency") -> DosSpectrum:
    """LDOS sampled on the emitter's line window."""
    return local_dos(stack, line_window(emitter), normalization=normalization, refine=False)


def line_enhancement(stack: Stack, emitter: EmitterModel, normalization: str = "low_frequency") -> float:
    return enhancement_at_line(line_spectrum(stack, emitter, normalization), emitter)


def tune_to_peak(stack: Stack, emitter: EmitterModel, normalization: str = "low_frequency") -> EmitterModel:
    """Copy of the emitter with its transition moved onto the band-edge LDOS peak."""
    omega_peak, _ = band_edge_peak(stack, kind="local_dos", normalization=normalization)
    return emitter.model_copy(update={"transition_frequency": omega_peak})


def report_for_enhancement(
    enhancement: float,
    emitter: EmitterModel,
    pump_rep_rate: float = Config.PUMP_REP_RATE_HZ,
    emission_probability_target: float = Config.EMISSION_TARGET,
    stirap_duration: float = 0.0,
) -> RateReport:
    """
    Rate arithmetic for a given enhancement.

    enhanced_rate = enhancement / bulk_lifetime; per-cycle wait
    T = -ln(1 - target) / enhanced_rate + stirap_duration;
    device_rep_rate = min(pump_rep_rate, 1/T).
    """
    if not 0.0 < emission_probability_target < 1.0:
        raise InvalidParameterError(
            f"emission probability target must lie in (0, 1), got {emission_probability_target}"
        )
    if pump_rep_rate <= 0:
        raise InvalidParameterError(f"pump repetition rate must be positive, got {pump_rep_rate}")
    if stirap_duration < 0:
        raise InvalidParameterError("stirap_duration must be non-negative")
    if enhancement <= 0:
        raise NumericalError("zero enhancement: the emitter cannot decay")

    enhanced_rate = enhancement / emitter.bulk_lifetime
    cycle_wait = -math.log1p(-emission_probability_target) / enhanced_rate + stirap_duration
    device_rep_rate = min(pump_rep_rate, 1.0 / cycle_wait)
    logger.info(
        f"Rate: enhancement={enhancement:.4g}, enhanced_rate={enhanced_rate:.4g}/s, "
        f"device={device_rep_rate:.4g}/s"
    )
    return RateReport(
        enhancement=enhancement,
        bulk_lifetime=emitter.bulk_lifetime,
        enhanced_rate=enhanced_rate,
        pump_rep_rate=pump_rep_rate,
        device_rep_rate=device_rep_rate,
        emission_probability_target=emission_probability_target,
        stirap_duration=stirap_duration,
        cycle_wait=cycle_wait,
    )


def rate_report(
    spectrum: DosSpectrum,
    emitter: EmitterModel,
    pump_rep_rate: float = Config.PUMP_REP_RATE_HZ,
    emission_probability_target: float = Config.EMISSION_TARGET,
    stirap_duration: float = 0.0,
) -> RateReport:
    """
    Enhanced decay rate and achievable repetition rate for an emitter line.

    Args:
        spectrum: LDOS covering the emitter line
        emitter: Emitter model (lifetime in seconds)
        pump_rep_rate: Pump repetition rate in 1/s
        emission_probability_target: Required per-cycle emission probability
        stirap_duration: Preparation time added to every cycle (s)

    Returns:
        RateReport
    """
    enhancement = enhancement_at_line(spectrum, emitter)
    return report_for_enhancement(enhancement, emitter, pump_rep_rate, emission_probability_target, stirap_duration)


def photon_stream(report: RateReport, n_cycles: int, seed: int = 0) -> List[PhotonEventRecord]:
    """
    Monte Carlo trigger/emission events, deterministic for a given seed.

    Triggers are spaced 1/device_rep_rate apart. After the STIRAP preparation
    the ion decays after an exponential delay at enhanced_rate; if that lands
    beyond the next trigger, the cycle records no emission.
    """
    if n_cycles < 1:
        raise InvalidParameterError(f"n_cycles must be >= 1, got {n_cycles}")
    rng = np.random.default_rng(seed)
    period = 1.0 / report.device_rep_rate
    delays = report.stirap_duration + rng.exponential(1.0 / report.enhanced_rate, n_cycles)

    events = []
    for k, delay in enumerate(delays):
        trigger = k * period
        emission = trigger + float(delay) if delay <= period else None
        events.append(PhotonEventRecord(cycle_index=k, trigger_time=trigger, emission_time=emission))
    logger.debug(f"Photon stream: {n_cycles} cycles, seed {seed}")
    return events


def jitter_stats(events: Sequence[PhotonEventRecord]) -> Tuple[float, float, float]:
    """
    Mean and standard deviation of trigger-to-photon delay over emitted
    cycles, plus the emitted fraction.

    Raises:
        InvalidParameterError: no cycle emitted
    """
    delays = np.array([event.delay for event in events if event.emission_time is not None])
    if delays.size == 0:
        raise InvalidParameterError("no emitted events")
    return float(np.mean(delays)), float(np.std(delays)), delays.size / len(events)


def expected_emitted_fraction(report: RateReport) -> float:
    """1 - exp(-enhanced_rate * (cycle length - preparation))."""
    window = 1.0 / report.device_rep_rate - report.stirap_duration
    return -math.expm1(-report.enhanced_rate * max(window, 0.0))


def peak_enhancement(n_low: float, n_high: float, num_periods: int, emitter: EmitterModel) -> Tuple[float, float]:
    """(w_peak, line-averaged LDOS) for a mid-stack emitter tuned to the band-edge peak."""
    stack = place_emitter_midstack(build_quarter_wave(
        QuarterWaveSpec(n_low=n_low, n_high=n_high, num_periods=num_periods)
    ))
    tuned = tune_to_peak(stack, emitter)
    return tuned.transition_frequency, line_enhancement(stack, tuned)


def periods_for_rate(
    n_low: float,
    n_high: float,
    target_rate: float,
    emitter: Optional[EmitterModel] = None,
    min_periods: int = 2,
    max_periods: int = 120,
) -> Tuple[int, float]:
    """
    Smallest period count whose tuned band-edge emitter decays at target_rate.

    Returns:
        (num_periods, enhanced_rate)

    Raises:
        NumericalError: target not reached before the line-averaged enhancement
            saturates or before max_periods
    """
    emitter = emitter or EmitterModel()
    best_rate, best_periods = 0.0, None
    for n in range(min_periods, max_periods + 1):
        _, enhancement = peak_enhancement(n_low, n_high, n, emitter)
        rate = enhancement / emitter.bulk_lifetime
        logger.debug(f"periods_for_rate: N={n}, rate={rate:.4g}/s")
        if rate >= target_rate:
            return n, rate
        if rate > best_rate:
            best_rate, best_periods = rate, n
        elif rate < 0.8 * best_rate:
            break
    raise NumericalError(
        f"target rate {target_rate:.4g}/s not reached; best {best_rate:.4g}/s at N={best_periods}"
    )


def _contrast_point(n_low: float, num_periods: int, emitter: EmitterModel, n_high: float) -> Tuple[float, float]:
    return peak_enhancement(n_low, n_high, num_periods, emitter)


def contrast_scan(
    n_low: float,
    n_highs: Sequence[float],
    num_periods: int,
    emitter: Optional[EmitterModel] = None,
) -> List[Dict[str, float]]:
    """Tuned band-edge enhancement versus index contrast."""
    emitter = emitter or EmitterModel()
    n_highs = [float(n_high) for n_high in n_highs]
    results = run_sweep(partial(_contrast_point, n_low, num_periods, emitter), n_highs)
    return [
        {"n_high": n_high, "omega_peak": omega_peak, "enhancement": enhancement}
        for n_high, (omega_peak, enhancement) in zip(n_highs, results)
    ]


def physical_scale(
    emitter: EmitterModel,
    n_low: float,
    n_high: float,
    wavelength: float = Config.EMITTER_WAVELENGTH_M,
) -> Dict[str, float]:
    """
    Physical units for the dimensionless design, fixing w_A to the given
    vacuum wavelength.
    """
    omega_a = 2.0 * math.pi * SPEED_OF_LIGHT / wavelength
    omega0 = omega_a / emitter.transition_frequency
    length_unit = SPEED_OF_LIGHT / omega0
    d_low = quarter_wave_thickness(n_low) * length_unit
    d_high = quarter_wave_thickness(n_high) * length_unit
    return {
        "omega0_rad_per_s": omega0,
        "midgap_wavelength_nm": 2.0 * math.pi * length_unit * 1e9,
        "d_low_nm": d_low * 1e9,
        "d_high_nm": d_high * 1e9,
        "period_nm": (d_low + d_high) * 1e9,
    }
