"""
Kerr switching of the band-edge enhancement across the emitter line.

A refractive-index change dn in the selected layers moves the band edge. The
emitter starts in the gap (OFF: line-averaged LDOS below off_threshold) and
the search finds the smallest |dn| that brings the bright band-edge mode onto
the line (ON: LDOS at least on_threshold).
"""

from functools import partial
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError
from scipy.optimize import brentq

from config import Config
from errors import InvalidParameterError, NumericalError, PreconditionError
from logger import logger
from schemas import EmitterModel, LayerSelector, QuarterWaveSpec, Stack, SwitchCriterion, SwitchResult
from emitter import enhancement_at_line, line_enhancement, tune_to_peak
from spectra import band_edge_peak, local_dos, lower_gap_edge
from stack import apply_index_shift, build_quarter_wave, place_emitter_midstack, selected_layers, unit_cell
from sweeps import run_sweep


def edge_shift(stack: Stack, delta_n: float, which: LayerSelector = "high", kind: str = "dos") -> float:
    """
    Band-edge peak displacement caused by an index change.

    Returns:
        w_peak(shifted) - w_peak(unshifted); exactly 0 for delta_n = 0
    """
    if delta_n == 0.0:
        return 0.0
    shifted = apply_index_shift(stack, delta_n, which)
    before, _ = band_edge_peak(stack, kind=kind)
    after, _ = band_edge_peak(shifted, kind=kind)
    return after - before


def off_edge_frequency(stack: Stack, emitter: EmitterModel, off_threshold: float = Config.KERR_OFF_THRESHOLD) -> float:
    """
    Frequency above the band-edge peak where the line-averaged LDOS first
    drops below off_threshold, i.e. the gap edge the emitter sees.
    """
    peak, _ = band_edge_peak(stack, kind="local_dos")
    linewidth = emitter.linewidth
    reach = lower_gap_edge(unit_cell(stack)) + 0.05
    margin = Config.LINE_WINDOW_WIDTHS * linewidth
    spacing = linewidth / 100.0
    grid = np.linspace(peak - margin, reach + margin, int(np.ceil((reach - peak + 2 * margin) / spacing)) + 1)
    spectrum = local_dos(stack, grid, refine=False)

    def averaged(center: float) -> float:
        return enhancement_at_line(spectrum, emitter.model_copy(update={"transition_frequency": center}))

    step = linewidth / 10.0
    previous = peak
    center = peak + step
    while center <= reach:
        if averaged(center) < off_threshold:
            return brentq(lambda w: averaged(w) - off_threshold, previous, center, xtol=1e-12)
        previous, center = center, center + step
    raise NumericalError(f"line-averaged LDOS stays above {off_threshold} up to w={reach:.4f}")


def default_emitter_for_kerr(stack: Stack, emitter: Optional[EmitterModel] = None,
                             off_threshold: float = Config.KERR_OFF_THRESHOLD) -> EmitterModel:
    """Emitter placed one linewidth beyond the OFF edge, inside the gap."""
    emitter = emitter or EmitterModel()
    edge = off_edge_frequency(stack, emitter, off_threshold)
    return emitter.model_copy(update={"transition_frequency": edge + emitter.linewidth})


def resolve_criterion(stack: Stack, emitter: EmitterModel, criterion: SwitchCriterion) -> SwitchCriterion:
    """Fill on_threshold from the unshifted peak when it is not given."""
    if criterion.on_threshold is not None:
        return criterion
    peak_line = line_enhancement(stack, tune_to_peak(stack, emitter))
    try:
        return SwitchCriterion(
            off_threshold=criterion.off_threshold,
            on_threshold=criterion.on_fraction * peak_line,
            on_fraction=criterion.on_fraction,
        )
    except ValidationError as e:
        raise InvalidParameterError(f"resolved ON threshold is not above the OFF threshold: {e}") from e


def _reference_index(stack: Stack, which: LayerSelector) -> float:
    indices = [stack.layers[i].refractive_index for i in selected_layers(stack, which)]
    return max(indices) if which != "low" else min(indices)


def _ldos_at_shift(stack: Stack, emitter: EmitterModel, which: LayerSelector, delta_n: float) -> float:
    return line_enhancement(apply_index_shift(stack, delta_n, which), emitter)


def required_shift(
    spec: QuarterWaveSpec,
    emitter: Optional[EmitterModel] = None,
    criterion: Optional[SwitchCriterion] = None,
    which: LayerSelector = "high",
) -> SwitchResult:
    """
    Smallest index change switching the emitter from OFF to ON.

    The emitter sits at the mid-stack high-index anchor. Without an explicit
    emitter it is placed one linewidth beyond the OFF edge. The shift sign
    moves the edge toward w_A. A coarse scan in steps of 1e-4 n brackets the
    first ON point (LDOS must rise monotonically up to it) and bisection
    narrows the bracket to Config.KERR_TOLERANCE.

    Raises:
        PreconditionError: the emitter is not OFF for the unshifted stack
        NumericalError: ON unreachable within |dn/n| <= 0.1, non-monotone
            response, or failed minimality re-check
    """
    criterion = criterion or SwitchCriterion()
    stack = place_emitter_midstack(build_quarter_wave(spec))
    if emitter is None:
        emitter = default_emitter_for_kerr(stack, off_threshold=criterion.off_threshold)
    resolved = resolve_criterion(stack, emitter, criterion)

    ldos_unshifted = line_enhancement(stack, emitter)
    if ldos_unshifted > resolved.off_threshold:
        raise PreconditionError(
            f"emitter at w={emitter.transition_frequency:.6f} is not OFF "
            f"(LDOS {ldos_unshifted:.4g} > {resolved.off_threshold})"
        )

    peak, _ = band_edge_peak(stack, kind="local_dos")
    sign = -1.0 if emitter.transition_frequency > peak else 1.0
    n_ref = _reference_index(stack, which)
    step = Config.KERR_SCAN_STEP * n_ref
    limit = Config.KERR_MAX_RELATIVE_SHIFT * n_ref

    def is_on(value: float) -> bool:
        return value >= resolved.on_threshold

    def evaluate(magnitude: float) -> float:
        try:
            return _ldos_at_shift(stack, emitter, which, sign * magnitude)
        except InvalidParameterError as e:
            raise NumericalError(f"ON unreachable: {e}") from e

    scanned = [ldos_unshifted]
    k = 0
    while True:
        k += 1
        magnitude = k * step
        if magnitude > limit + 1e-15:
            raise NumericalError(
                f"ON threshold {resolved.on_threshold:.4g} unreachable within |dn/n| <= "
                f"{Config.KERR_MAX_RELATIVE_SHIFT}"
            )
        scanned.append(evaluate(magnitude))
        if is_on(scanned[-1]):
            break

    tolerance = 1e-9 * max(scanned)
    if np.any(np.diff(scanned) < -tolerance):
        raise NumericalError("LDOS at the emitter is not monotone in dn over the search bracket")
    logger.debug(f"Kerr scan bracketed ON after {k} steps of {step:.3g}")

    low, high = (k - 1) * step, k * step
    while high - low > Config.KERR_TOLERANCE:
        middle = 0.5 * (low + high)
        if is_on(evaluate(middle)):
            high = middle
        else:
            low = middle

    delta_n = sign * high
    ldos_required = evaluate(high)
    ldos_90 = evaluate(0.9 * high)
    if not is_on(ldos_required) or is_on(ldos_90):
        raise NumericalError("minimality re-check of the required shift failed")

    shift = edge_shift(stack, delta_n, which)
    logger.info(
        f"Kerr switch: dn={delta_n:.6g} (dn/n={delta_n / n_ref:.4g}), edge shift {shift:.4g}, "
        f"w_A={emitter.transition_frequency:.6f}"
    )
    return SwitchResult(
        delta_n_required=delta_n,
        delta_n_over_n=delta_n / n_ref,
        edge_shift=shift,
        emitter_frequency=emitter.transition_frequency,
        selector=which,
        num_periods=spec.num_periods,
        criterion_used=resolved,
        ldos_unshifted=ldos_unshifted,
        ldos_at_required=ldos_required,
        ldos_at_90_percent=ldos_90,
    )


def _sweep_point(delta_n: float, stack: Stack, emitter: EmitterModel, which: LayerSelector) -> float:
    return _ldos_at_shift(stack, emitter, which, delta_n)


def shift_sweep(
    stack: Stack,
    emitter: EmitterModel,
    deltas: Sequence[float],
    which: LayerSelector = "high",
    workers: Optional[int] = None,
) -> List[Tuple[float, float]]:
    """Line-averaged LDOS at w_A for each index change."""
    values = run_sweep(partial(_sweep_point, stack=stack, emitter=emitter, which=which), deltas, workers)
    return list(zip([float(d) for d in deltas], values))
