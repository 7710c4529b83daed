"""
Transfer-matrix engine for 1D dielectric stacks at normal incidence.

Characteristic-matrix convention: each layer maps the (E, H) state at its
output plane to its input plane,

    L = [[cos d, -i sin d / n], [-i n sin d, cos d]],   d = n * thickness * w,

with c = 1, frequencies in units of w0 and lengths in c/w0. Both half-spaces
are vacuum, so t = 2 / (m11 + m12 + m21 + m22).
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.signal import find_peaks

from config import Config
from errors import InvalidParameterError, NumericalError
from logger import logger
from schemas import Layer, Stack
from stack import quarter_wave_thickness, stack_hash, unit_cell

SpectrumKind = str  # "dos" | "local_dos"
LDOS_NORMALIZATIONS = ("low_frequency", "vacuum", "bulk")
GAP_TOLERANCE = 1e-12


@dataclass(frozen=True)
class TransferMatrix:
    """Accumulated characteristic matrix at a single frequency."""
    m11: complex
    m12: complex
    m21: complex
    m22: complex

    @property
    def determinant(self) -> complex:
        return self.m11 * self.m22 - self.m12 * self.m21


@dataclass(frozen=True)
class ScatteringResult:
    frequency: float
    t: complex
    r: complex

    @property
    def transmittance(self) -> float:
        return abs(self.t) ** 2

    @property
    def reflectance(self) -> float:
        return abs(self.r) ** 2


@dataclass(frozen=True)
class DosSpectrum:
    """Normalized (local) mode density on an ascending frequency grid."""
    frequencies: np.ndarray
    values: np.ndarray
    kind: SpectrumKind
    normalization: str
    stack_id: str = ""

    def __post_init__(self):
        if self.frequencies.shape != self.values.shape:
            raise InvalidParameterError("frequencies and values differ in shape")
        if self.frequencies.size > 1 and np.any(np.diff(self.frequencies) <= 0):
            raise InvalidParameterError("frequency grid must be strictly ascending")
        if np.any(self.values < 0):
            raise NumericalError("negative mode density")

    def peak(self) -> Tuple[float, float]:
        i = int(np.argmax(self.values))
        return float(self.frequencies[i]), float(self.values[i])


@dataclass(frozen=True)
class DispersionResult:
    """
    Bloch dispersion of an infinite two-layer crystal.

    bloch_phase is K*Lambda: real in bands, pi*m + i*kappa in gaps.
    group_velocity is |dw/dk| in units of c, NaN inside gaps.
    """
    frequencies: np.ndarray
    cos_bloch: np.ndarray
    bloch_phase: np.ndarray
    group_velocity: np.ndarray
    band_edges: List[float]
    gaps: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def lower_gap_edge(self) -> Optional[float]:
        return self.gaps[0][0] if self.gaps else None

    @property
    def upper_gap_edge(self) -> Optional[float]:
        return self.gaps[0][1] if self.gaps else None

    @property
    def gap_width(self) -> float:
        if not self.gaps:
            return 0.0
        return self.gaps[0][1] - self.gaps[0][0]


# ---------------------------------------------------------------------------
# Matrix propagation
# ---------------------------------------------------------------------------

def _as_frequencies(omega) -> np.ndarray:
    return np.atleast_1d(np.asarray(omega, dtype=float))


def _layer_matrix(n: float, d: float, omega: np.ndarray, with_derivative: bool = False):
    phase = n * d * omega
    c, s = np.cos(phase), np.sin(phase)
    matrix = np.empty(omega.shape + (2, 2), dtype=complex)
    matrix[..., 0, 0] = c
    matrix[..., 0, 1] = -1j * s / n
    matrix[..., 1, 0] = -1j * n * s
    matrix[..., 1, 1] = c
    if not with_derivative:
        return matrix, None
    derivative = np.empty_like(matrix)
    derivative[..., 0, 0] = -s
    derivative[..., 0, 1] = -1j * c / n
    derivative[..., 1, 0] = -1j * n * c
    derivative[..., 1, 1] = -s
    return matrix, derivative * (n * d)


def _propagate(segments: Sequence[Tuple[float, float]], omega: np.ndarray, with_derivative: bool = False):
    """
    Product of layer matrices (and its frequency derivative) for (n, d) segments
    listed from input side to output side.
    """
    total = np.broadcast_to(np.eye(2, dtype=complex), omega.shape + (2, 2)).copy()
    d_total = np.zeros_like(total) if with_derivative else None
    for n, d in segments:
        if d == 0.0:
            continue
        matrix, d_matrix = _layer_matrix(n, d, omega, with_derivative)
        if with_derivative:
            d_total = d_total @ matrix + total @ d_matrix
        total = total @ matrix
    return total, d_total


def _segments(layers: Sequence[Layer]) -> List[Tuple[float, float]]:
    return [(layer.refractive_index, layer.thickness) for layer in layers]


def _entry_sum(matrix: np.ndarray) -> np.ndarray:
    return matrix[..., 0, 0] + matrix[..., 0, 1] + matrix[..., 1, 0] + matrix[..., 1, 1]


def transfer_matrix(stack: Stack, omega: float) -> TransferMatrix:
    if omega <= 0:
        raise InvalidParameterError(f"frequency must be positive, got {omega}")
    total, _ = _propagate(_segments(stack.layers), _as_frequencies(omega))
    m = total[0]
    return TransferMatrix(m11=m[0, 0], m12=m[0, 1], m21=m[1, 0], m22=m[1, 1])


def transmission_arrays(stack: Stack, omega, reverse: bool = False):
    """Vectorized (t, r) over a frequency array."""
    omega = _as_frequencies(omega)
    layers = stack.layers[::-1] if reverse else stack.layers
    total, _ = _propagate(_segments(layers), omega)
    denominator = _entry_sum(total)
    t = 2.0 / denominator
    r = (total[..., 0, 0] + total[..., 0, 1] - total[..., 1, 0] - total[..., 1, 1]) / denominator
    return t, r


def scattering(stack: Stack, omega: float, reverse: bool = False) -> ScatteringResult:
    """
    Complex transmission and reflection amplitudes at one frequency.

    Args:
        stack: Layer stack between vacuum half-spaces
        omega: Frequency in units of w0 (> 0)
        reverse: Illuminate from the right instead of the left

    Returns:
        ScatteringResult with t and r
    """
    if omega <= 0:
        raise InvalidParameterError(f"frequency must be positive, got {omega}")
    t, r = transmission_arrays(stack, omega, reverse=reverse)
    return ScatteringResult(frequency=float(omega), t=complex(t[0]), r=complex(r[0]))


# ---------------------------------------------------------------------------
# Global density of modes
# ---------------------------------------------------------------------------

def _check_grid(grid) -> np.ndarray:
    grid = _as_frequencies(grid)
    if grid.size == 0:
        raise InvalidParameterError("empty frequency grid")
    if grid[0] <= 0.0 or grid[-1] >= Config.GRID_MAX:
        raise InvalidParameterError(f"frequency grid must lie inside (0, {Config.GRID_MAX})")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise InvalidParameterError("frequency grid must be strictly ascending")
    return grid


def _phase_derivative(stack: Stack, omega: np.ndarray) -> np.ndarray:
    """d(arg t)/dw from simultaneous propagation of M and dM/dw."""
    total, d_total = _propagate(_segments(stack.layers), omega, with_derivative=True)
    # t = 2/S  =>  t'/t = -S'/S and d(arg t)/dw = Im(t'/t)
    return -np.imag(_entry_sum(d_total) / _entry_sum(total))


def _finite_difference_phase_derivative(stack: Stack, omega: np.ndarray, step: float) -> np.ndarray:
    t_plus, _ = transmission_arrays(stack, omega + step)
    t_minus, _ = transmission_arrays(stack, omega - step)
    return np.angle(t_plus / t_minus) / (2.0 * step)


def _clip_density(values: np.ndarray, label: str) -> np.ndarray:
    low = float(np.min(values)) if values.size else 0.0
    if low < -1e-9:
        logger.debug(f"{label}: clipping negative density {low:.3e}")
    return np.clip(values, 0.0, None)


def _dos_values(stack: Stack, omega: np.ndarray) -> np.ndarray:
    if not stack.layers:
        raise InvalidParameterError("dos of an empty stack is undefined")
    return _phase_derivative(stack, omega) / stack.optical_length


def dos(stack: Stack, grid=None, refine: Optional[bool] = None) -> DosSpectrum:
    """
    Density of modes from the transmission-phase derivative.

    With t = x + iy the density is (y'x - x'y)/(x^2 + y^2), normalized by the
    optical length so an index-matched homogeneous stack gives exactly 1.

    Args:
        stack: Layer stack
        grid: Ascending frequencies in (0, 2); defaults to Config.default_grid()
        refine: Add x100 local refinement around detected peaks (default: only
            when the default grid is used)

    Returns:
        DosSpectrum of kind "dos"
    """
    if grid is None:
        grid = Config.default_grid()
        refine = True if refine is None else refine
    grid = _check_grid(grid)
    if refine:
        grid = _refine_around_peaks(grid, lambda w: _dos_values(stack, w))
    values = _clip_density(_dos_values(stack, grid), "dos")
    return DosSpectrum(grid, values, kind="dos", normalization="optical_length", stack_id=stack_hash(stack))


def finite_difference_dos(stack: Stack, grid, step: float = Config.FINITE_DIFF_STEP) -> DosSpectrum:
    """Centered-difference oracle for dos()."""
    grid = _check_grid(grid)
    values = _finite_difference_phase_derivative(stack, grid, step) / stack.optical_length
    return DosSpectrum(grid, _clip_density(values, "fd-dos"), kind="dos",
                       normalization="optical_length", stack_id=stack_hash(stack))


def _refine_around_peaks(grid: np.ndarray, evaluate: Callable[[np.ndarray], np.ndarray],
                         max_peaks: int = 4) -> np.ndarray:
    values = evaluate(grid)
    peaks, _ = find_peaks(values)
    if peaks.size == 0:
        return grid
    ranked = peaks[np.argsort(values[peaks])[::-1]][:max_peaks]
    spacing = (grid[-1] - grid[0]) / max(grid.size - 1, 1) / Config.PEAK_REFINE_FACTOR
    half = Config.PEAK_REFINE_HALFWIDTH
    pieces = [grid]
    for index in ranked:
        center = grid[index]
        low = max(center - half, grid[0])
        high = min(center + half, grid[-1])
        count = int(round((high - low) / spacing)) + 1
        pieces.append(np.linspace(low, high, count))
    refined = np.unique(np.concatenate(pieces))
    logger.debug(f"Refined grid around {ranked.size} peaks: {grid.size} -> {refined.size} points")
    return refined


# ---------------------------------------------------------------------------
# Local density of modes
# ---------------------------------------------------------------------------

def field_at(stack: Stack, omega) -> Tuple[np.ndarray, np.ndarray]:
    """
    Electric field at the emitter anchor for unit-amplitude illumination from
    the left and from the right.

    The field follows from back-substitution: the state at the anchor equals
    the product of matrices from the anchor to the exit face applied to the
    transmitted state (t, t).
    """
    if stack.emitter_anchor is None:
        raise InvalidParameterError("local density of modes needs an emitter anchor")
    omega = _as_frequencies(omega)
    anchor = stack.emitter_anchor
    segments = _segments(stack.layers)
    n_a, d_a = segments[anchor.layer]

    right = [(n_a, (1.0 - anchor.offset) * d_a)] + segments[anchor.layer + 1:]
    left = [(n_a, anchor.offset * d_a)] + segments[:anchor.layer][::-1]

    fields = []
    for toward_exit, toward_entry in ((right, left), (left, right)):
        exit_part, _ = _propagate(toward_exit, omega)
        entry_part, _ = _propagate(toward_entry[::-1], omega)
        t = 2.0 / _entry_sum(entry_part @ exit_part)
        fields.append(t * (exit_part[..., 0, 0] + exit_part[..., 0, 1]))
    return fields[0], fields[1]


def _ldos_vacuum(stack: Stack, omega: np.ndarray) -> np.ndarray:
    e_left, e_right = field_at(stack, omega)
    return 0.5 * (np.abs(e_left) ** 2 + np.abs(e_right) ** 2)


def ldos_scale(stack: Stack, normalization: str = "low_frequency") -> float:
    """Factor converting vacuum-normalized LDOS to the requested normalization."""
    if normalization not in LDOS_NORMALIZATIONS:
        raise InvalidParameterError(f"unknown LDOS normalization: {normalization}")
    if normalization == "vacuum":
        return 1.0
    if normalization == "bulk":
        return stack.layers[stack.emitter_anchor.layer].refractive_index
    reference = float(np.mean(_ldos_vacuum(stack, Config.reference_grid())))
    if reference <= 0:
        raise NumericalError("low-frequency LDOS reference vanished")
    return 1.0 / reference


def local_dos(stack: Stack, grid=None, normalization: str = "low_frequency",
              refine: Optional[bool] = None) -> DosSpectrum:
    """
    Local density of modes at the emitter anchor.

    Sum of |E|^2 over left- and right-incident unit-flux scattering states,
    proportional to the spontaneous-emission rate of a dipole at the anchor.

    Args:
        stack: Stack with emitter_anchor set
        grid: Ascending frequencies in (0, 2); defaults to Config.default_grid()
        normalization: "low_frequency" (mean over [0.05, 0.15] is 1),
            "vacuum" (free space is 1) or "bulk" (infinite medium of the
            anchor layer's index is 1)
        refine: Local x100 refinement around peaks

    Returns:
        DosSpectrum of kind "local_dos"
    """
    if stack.emitter_anchor is None:
        raise InvalidParameterError("local density of modes needs an emitter anchor")
    if grid is None:
        grid = Config.default_grid()
        refine = True if refine is None else refine
    grid = _check_grid(grid)
    scale = ldos_scale(stack, normalization)
    if refine:
        grid = _refine_around_peaks(grid, lambda w: _ldos_vacuum(stack, w))
    values = _clip_density(scale * _ldos_vacuum(stack, grid), "ldos")
    return DosSpectrum(grid, values, kind="local_dos", normalization=normalization, stack_id=stack_hash(stack))


# ---------------------------------------------------------------------------
# Infinite-crystal dispersion
# ---------------------------------------------------------------------------

def _cell_cos(cell: Tuple[Layer, Layer], omega):
    (n1, d1), (n2, d2) = _segments(cell)
    a = 0.5 * (n1 / n2 + n2 / n1)
    p1, p2 = n1 * d1 * omega, n2 * d2 * omega
    value = np.cos(p1) * np.cos(p2) - a * np.sin(p1) * np.sin(p2)
    slope = (-n1 * d1 * np.sin(p1) * np.cos(p2) - n2 * d2 * np.cos(p1) * np.sin(p2)
             - a * (n1 * d1 * np.cos(p1) * np.sin(p2) + n2 * d2 * np.sin(p1) * np.cos(p2)))
    return value, slope


def dispersion_for_cell(cell: Tuple[Layer, Layer], omega_max: float = Config.GRID_MAX,
                        points: int = Config.GRID_POINTS) -> DispersionResult:
    """
    Bloch dispersion cos(K Lambda) = cos d1 cos d2 - (n1/n2 + n2/n1)/2 sin d1 sin d2
    of an arbitrary two-layer unit cell.

    Gap edges come from a bracketing root finder on |cos(K Lambda)| - 1; points
    where |cos(K Lambda)| touches 1 without opening a gap are band edges of zero
    gap width.
    """
    omega = np.linspace(0.0, omega_max, points)
    cos_k, slope = _cell_cos(cell, omega)
    # |cos| may exceed 1 by rounding at zero-width touches
    excess = np.abs(cos_k) - 1.0 - GAP_TOLERANCE

    def excess_at(w: float) -> float:
        return float(abs(_cell_cos(cell, w)[0]) - 1.0 - GAP_TOLERANCE)

    edges = []
    crossings = np.nonzero(np.sign(excess[:-1]) * np.sign(excess[1:]) < 0)[0]
    for i in crossings:
        edges.append(brentq(excess_at, omega[i], omega[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))

    # zero-width touches: local maxima of |cos| reaching 1
    magnitude = np.abs(cos_k)
    for i in range(points):
        left = magnitude[i - 1] if i > 0 else -np.inf
        right = magnitude[i + 1] if i < points - 1 else -np.inf
        if magnitude[i] < left or magnitude[i] < right or magnitude[i] < 1.0 - 1e-6 or excess[i] > 1e-10:
            continue
        lo, hi = omega[max(i - 1, 0)], omega[min(i + 1, points - 1)]
        if hi > lo:
            best = minimize_scalar(lambda w: -abs(_cell_cos(cell, w)[0]), bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-13})
            candidate = float(best.x) if -best.fun >= magnitude[i] else float(omega[i])
        else:
            candidate = float(omega[i])
        if abs(excess_at(candidate)) <= 1e-9:
            edges.append(candidate)

    edges = sorted(edges)
    merged: List[float] = []
    for edge in edges:
        if not merged or edge - merged[-1] > 1e-9:
            merged.append(edge)

    gaps = []
    for lo, hi in zip(merged[:-1], merged[1:]):
        if excess_at(0.5 * (lo + hi)) > 0:
            gaps.append((lo, hi))

    in_band = excess <= 0
    sin_k = np.sqrt(np.clip(1.0 - cos_k ** 2, 0.0, None))
    bloch = np.empty(points, dtype=complex)
    bloch[in_band] = np.arccos(np.clip(cos_k[in_band], -1.0, 1.0))
    gap_points = ~in_band
    kappa = np.arccosh(np.abs(cos_k[gap_points]))
    bloch[gap_points] = np.where(cos_k[gap_points] < 0, np.pi, 0.0) + 1j * kappa

    period = sum(layer.thickness for layer in cell)
    velocity = np.full(points, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        velocity[in_band] = np.abs(period * sin_k[in_band] / slope[in_band])

    logger.debug(f"Dispersion: {len(merged)} band edges, {len(gaps)} gaps below w={omega_max}")
    return DispersionResult(omega, cos_k, bloch, velocity, merged, gaps)


def dispersion(n_low: float, n_high: float, omega_max: float = Config.GRID_MAX,
               points: int = Config.GRID_POINTS) -> DispersionResult:
    """Dispersion of the quarter-wave crystal with indices (n_low, n_high)."""
    if n_low < 1 or n_high < 1:
        raise InvalidParameterError("refractive indices must be >= 1")
    cell = (Layer(n=n_low, d=quarter_wave_thickness(n_low)), Layer(n=n_high, d=quarter_wave_thickness(n_high)))
    return dispersion_for_cell(cell, omega_max, points)


def gap_edges(n_low: float, n_high: float) -> Tuple[float, float]:
    """Lower and upper edge of the first gap of the quarter-wave crystal."""
    result = dispersion(n_low, n_high)
    gaps = [gap for gap in result.gaps if gap[0] > 0]
    if not gaps:
        raise NumericalError(f"no band gap for n=({n_low}, {n_high})")
    return gaps[0]


def lower_gap_edge(cell: Tuple[Layer, Layer], omega_max: float = Config.GRID_MAX) -> float:
    """First gap edge above zero frequency."""
    result = dispersion_for_cell(cell, omega_max)
    gaps = [gap for gap in result.gaps if gap[0] > 0]
    if not gaps:
        raise NumericalError("unit cell has no band gap below the grid limit")
    return gaps[0][0]


def energy_fraction(cell: Tuple[Layer, Layer], layer_index: int = 1, relative_step: float = 1e-6) -> float:
    """
    Electric-energy fraction of the lower band-edge Bloch mode in one layer of
    the unit cell.

    First-order perturbation gives dw/w = -f dn/n for an index change dn in
    that layer, so f is read off the edge's sensitivity to the index.
    """
    edge = lower_gap_edge(cell)
    n = cell[layer_index].refractive_index

    def edge_for(shifted_n: float) -> float:
        layers = list(cell)
        # unvalidated: a central difference may step below n = 1
        layers[layer_index] = Layer.model_construct(refractive_index=shifted_n, thickness=cell[layer_index].thickness)
        lo, hi = edge * 0.9, edge * 1.1
        return brentq(lambda w: _cell_cos(tuple(layers), w)[0] + 1.0, lo, hi, xtol=1e-15)

    step = relative_step * n
    slope = (edge_for(n + step) - edge_for(n - step)) / (2.0 * step)
    return float(-slope * n / edge)


# ---------------------------------------------------------------------------
# Band-edge peak
# ---------------------------------------------------------------------------

def spectrum_evaluator(stack: Stack, kind: SpectrumKind = "dos",
                       normalization: str = "low_frequency") -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized callable w -> normalized (local) mode density."""
    if kind == "dos":
        return lambda w: _dos_values(stack, _as_frequencies(w))
    if kind == "local_dos":
        scale = ldos_scale(stack, normalization)
        return lambda w: scale * _ldos_vacuum(stack, _as_frequencies(w))
    raise InvalidParameterError(f"unknown spectrum kind: {kind}")


def band_edge_peak(stack: Stack, kind: SpectrumKind = "dos",
                   normalization: str = "low_frequency") -> Tuple[float, float]:
    """
    Locate the band-edge resonance below the first gap of a periodic stack.

    Grid scan over [0.5, lower gap edge - guard], x100 refinement around the
    coarse maximum, then golden-section polishing.

    Returns:
        (w_peak, rho_peak)

    Raises:
        NumericalError: when the unit cell has no gap (no peak to find)
    """
    cell = unit_cell(stack)
    if cell[0].refractive_index == cell[1].refractive_index:
        raise NumericalError("homogeneous stack has no band-edge peak")
    upper = lower_gap_edge(cell) - Config.PEAK_EDGE_GUARD
    lower = Config.PEAK_WINDOW_LOW
    if upper <= lower:
        raise NumericalError(f"peak window [{lower}, {upper}] is empty")

    evaluate = spectrum_evaluator(stack, kind, normalization)
    step = Config.PEAK_SCAN_STEP
    coarse = np.linspace(lower, upper, int(np.ceil((upper - lower) / step)) + 1)
    i = int(np.argmax(evaluate(coarse)))

    half = Config.PEAK_REFINE_HALFWIDTH
    lo, hi = max(coarse[i] - half, lower), min(coarse[i] + half, upper)
    fine = np.linspace(lo, hi, int(np.ceil((hi - lo) / (step / Config.PEAK_REFINE_FACTOR))) + 1)
    fine_values = evaluate(fine)
    j = int(np.argmax(fine_values))
    w_peak, rho_peak = float(fine[j]), float(fine_values[j])

    if 0 < j < fine.size - 1:
        try:
            polished = minimize_scalar(lambda w: -float(evaluate(w)[0]),
                                       bracket=(fine[j - 1], fine[j], fine[j + 1]),
                                       method="golden", options={"xtol": 1e-10})
            if -polished.fun >= rho_peak and fine[j - 1] <= polished.x <= fine[j + 1]:
                w_peak, rho_peak = float(polished.x), float(-polished.fun)
        except ValueError as exc:
            logger.debug(f"Golden-section polish skipped: {exc}")

    if rho_peak <= 0:
        raise NumericalError("no band-edge peak found")
    logger.info(f"Band-edge peak ({kind}): w={w_peak:.6f}, rho={rho_peak:.3f}")
    return w_peak, rho_peak
