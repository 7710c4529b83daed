"""
Tests for the transfer-matrix engine, mode densities and dispersion.
"""

import math

import numpy as np
import pytest

from errors import InvalidParameterError, NumericalError
from schemas import Layer, QuarterWaveSpec, Stack
from spectra import (
    band_edge_peak,
    dispersion,
    dos,
    energy_fraction,
    field_at,
    finite_difference_dos,
    gap_edges,
    ldos_scale,
    local_dos,
    scattering,
    transfer_matrix,
    transmission_arrays,
)
from stack import build_quarter_wave, quarter_wave_thickness, unit_cell, with_anchor

LOWER_EDGE = (2 / math.pi) * math.asin(math.sqrt(8) / 3)
GAP_WIDTH = (4 / math.pi) * math.asin(1 / 3)
CONVERGENCE_PERIODS = (5, 10, 20, 40)


def quarter_wave(num_periods, n_low=1.0, n_high=2.0):
    return build_quarter_wave(QuarterWaveSpec(n_low=n_low, n_high=n_high, num_periods=num_periods))


def random_stack(rng):
    count = int(rng.integers(1, 11))
    indices = rng.uniform(1.0, 2.5, count)
    thicknesses = rng.uniform(0.1, 1.5, count)
    return Stack(layers=tuple(Layer(n=float(n), d=float(d)) for n, d in zip(indices, thicknesses)))


@pytest.fixture(scope="module")
def peaks_by_periods():
    """Band-edge DOS peak (w, rho) for each period count of the convergence series."""
    return {n: band_edge_peak(quarter_wave(n)) for n in CONVERGENCE_PERIODS}


def test_quarter_wave_slab_matches_fresnel():
    """A quarter-wave n=2 slab transmits 64% at w0."""
    slab = Stack(layers=(Layer(n=2.0, d=quarter_wave_thickness(2.0)),))
    result = scattering(slab, 1.0)
    assert result.transmittance == pytest.approx(0.64, abs=1e-12)
    assert result.reflectance == pytest.approx(0.36, abs=1e-12)


def test_random_stacks_conserve_energy():
    """|r|^2 + |t|^2 = 1 over 10^4 random (stack, w) samples."""
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for _ in range(100):
        stack = random_stack(rng)
        omega = np.sort(rng.uniform(0.01, 1.99, 100))
        t, r = transmission_arrays(stack, omega)
        worst = max(worst, float(np.max(np.abs(np.abs(t) ** 2 + np.abs(r) ** 2 - 1.0))))
    assert worst < 1e-9


def test_random_transfer_matrices_are_unimodular():
    """det M = 1 to 1e-10 over 10^4 random (stack, w) samples."""
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        stack = random_stack(rng)
        for omega in rng.uniform(0.01, 1.99, 100):
            worst = max(worst, abs(transfer_matrix(stack, float(omega)).determinant - 1.0))
    assert worst < 1e-10


def test_illumination_side_does_not_change_transmission(stack_10):
    """Transmission is the same from either side."""
    forward = scattering(stack_10, 0.75)
    backward = scattering(stack_10, 0.75, reverse=True)
    assert forward.t == pytest.approx(backward.t, abs=1e-12)


def test_nonpositive_frequency_is_rejected(stack_10):
    """Scattering needs w > 0."""
    with pytest.raises(InvalidParameterError):
        scattering(stack_10, 0.0)


def test_index_matched_stack_has_unit_dos():
    """A vacuum-matched stack has DOS exactly 1."""
    stack = Stack(layers=tuple(Layer(n=1.0, d=0.7) for _ in range(12)))
    spectrum = dos(stack, np.linspace(0.05, 1.95, 400))
    np.testing.assert_allclose(spectrum.values, 1.0, atol=1e-9)


def test_homogeneous_dielectric_slab_averages_to_one():
    """Fabry-Perot ripple of a uniform slab averages to 1."""
    stack = quarter_wave(10, n_low=1.5, n_high=1.5)
    grid = np.linspace(0.01, 1.99, 20001)
    assert np.mean(dos(stack, grid).values) == pytest.approx(1.0, abs=0.02)


def test_analytic_dos_matches_finite_difference():
    """The analytic phase derivative agrees with centred differences on 10^3 points."""
    stack = quarter_wave(5)
    grid = np.linspace(0.3, 1.7, 1000)
    analytic = dos(stack, grid).values
    numeric = finite_difference_dos(stack, grid).values
    np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-8)


def test_dos_is_nonnegative_and_symmetric_about_midgap():
    """A quarter-wave stack has a DOS mirror-symmetric about w0."""
    stack = quarter_wave(10)
    grid = np.linspace(0.3, 0.95, 131)
    low = dos(stack, grid).values
    high = dos(stack, (2.0 - grid)[::-1]).values[::-1]
    assert np.all(low >= 0)
    np.testing.assert_allclose(low, high, rtol=1e-7)


def test_dos_is_suppressed_in_gap():
    """Mode density inside the gap of a 29-period stack is tiny."""
    spectrum = dos(quarter_wave(29), np.array([0.9, 1.0, 1.1]))
    assert np.all(spectrum.values < 0.01)


@pytest.mark.parametrize("grid", [
    np.array([0.0, 0.5]),
    np.array([0.5, 2.0]),
    np.array([0.6, 0.5]),
])
def test_invalid_grids_are_rejected(stack_10, grid):
    """Grids must be ascending and inside (0, 2)."""
    with pytest.raises(InvalidParameterError):
        dos(stack_10, grid)


def test_default_grid_is_refined_around_peaks():
    """The default grid gains dense points around the resonances."""
    spectrum = dos(quarter_wave(10))
    spacing = np.diff(spectrum.frequencies)
    assert spectrum.frequencies.size > 20001
    assert spacing.min() < 2e-6


def test_spectrum_peak_is_grid_maximum():
    """DosSpectrum.peak returns the sampled maximum."""
    spectrum = dos(quarter_wave(10), np.linspace(0.5, 0.78, 2001))
    omega, rho = spectrum.peak()
    assert rho == spectrum.values.max()
    assert rho <= band_edge_peak(quarter_wave(10))[1] * (1 + 1e-9)
    assert omega < LOWER_EDGE


def test_band_edge_peak_for_29_periods():
    """The N=29 DOS peak sits just below the lower gap edge at about 44."""
    omega, rho = band_edge_peak(quarter_wave(29), kind="dos")
    assert omega < LOWER_EDGE
    assert abs(omega - 0.781) < 0.01
    assert 38.0 < rho < 50.0


def test_band_edge_peak_scales_as_square_of_periods(peaks_by_periods):
    """Doubling N from 20 to 40 quadruples the peak within 15%."""
    ratio = peaks_by_periods[40][1] / peaks_by_periods[20][1]
    assert ratio == pytest.approx(4.0, rel=0.15)


def test_band_edge_peak_grows_with_periods(peaks_by_periods):
    """rho_peak increases strictly along N = 5, 10, 20, 40."""
    heights = [peaks_by_periods[n][1] for n in CONVERGENCE_PERIODS]
    assert all(a < b for a, b in zip(heights, heights[1:]))


def test_band_edge_peak_approaches_edge_monotonically(peaks_by_periods):
    """w_peak rises toward the lower gap edge along N = 5, 10, 20, 40."""
    positions = [peaks_by_periods[n][0] for n in CONVERGENCE_PERIODS]
    assert all(a < b for a, b in zip(positions, positions[1:]))
    assert positions[-1] < LOWER_EDGE


def test_homogeneous_stack_has_no_band_edge_peak():
    """Equal indices give no gap and no band-edge peak."""
    with pytest.raises(NumericalError):
        band_edge_peak(quarter_wave(10, n_low=1.5, n_high=1.5))


def test_ldos_peak_at_midstack_ion_for_29_periods(stack_29):
    """The mid-stack LDOS peak of the N=29 stack is about 115."""
    omega, rho = band_edge_peak(stack_29, kind="local_dos")
    assert omega < LOWER_EDGE
    assert 97.75 <= rho <= 132.25


def test_ldos_normalizations_are_consistent(stack_10):
    """The three normalizations differ only by constant factors."""
    grid = np.linspace(0.5, 0.9, 41)
    vacuum = local_dos(stack_10, grid, normalization="vacuum").values
    low = local_dos(stack_10, grid, normalization="low_frequency").values
    bulk = local_dos(stack_10, grid, normalization="bulk").values
    np.testing.assert_allclose(low, vacuum * ldos_scale(stack_10, "low_frequency"), rtol=1e-12)
    np.testing.assert_allclose(bulk, 2.0 * vacuum, rtol=1e-12)


def test_ldos_of_vacuum_is_one():
    """An emitter in an index-matched stack sees LDOS 1 in every normalization."""
    stack = Stack(layers=tuple(Layer(n=1.0, d=0.5) for _ in range(6)), emitter={"layer": 2, "offset": 0.3})
    for normalization in ("vacuum", "low_frequency", "bulk"):
        spectrum = local_dos(stack, np.linspace(0.1, 1.9, 50), normalization=normalization)
        np.testing.assert_allclose(spectrum.values, 1.0, atol=1e-9)


def test_ldos_is_small_at_field_node(stack_29):
    """At the band-edge frequency the LDOS at the field node is far below the global DOS peak."""
    omega, _ = band_edge_peak(stack_29, kind="local_dos")
    _, dos_peak = band_edge_peak(stack_29, kind="dos")
    frequency = np.array([omega])

    # one full period on either side of the emitter layer
    positions = [(layer, offset) for layer in range(27, 31) for offset in np.linspace(0.0, 1.0, 41)]
    intensity = []
    for layer, offset in positions:
        e_left, e_right = field_at(with_anchor(stack_29, layer, offset), frequency)
        intensity.append(abs(e_left[0]) ** 2 + abs(e_right[0]) ** 2)
    node = positions[int(np.argmin(intensity))]
    antinode = positions[int(np.argmax(intensity))]

    at_node = local_dos(with_anchor(stack_29, *node), frequency).values[0]
    at_antinode = local_dos(with_anchor(stack_29, *antinode), frequency).values[0]
    assert at_node < 0.1 * dos_peak
    assert at_antinode > 10 * at_node


def test_ldos_requires_anchor():
    """LDOS needs an emitter anchor."""
    with pytest.raises(InvalidParameterError):
        local_dos(quarter_wave(5), np.array([0.5]))


def test_ldos_unknown_normalization(stack_10):
    """Unknown normalization names are rejected."""
    with pytest.raises(InvalidParameterError):
        local_dos(stack_10, np.array([0.5]), normalization="peak")


def test_dispersion_gap_edges_match_closed_form():
    """Gap edges of the (1, 2) crystal match the arcsine closed form."""
    result = dispersion(1.0, 2.0)
    assert result.lower_gap_edge == pytest.approx(LOWER_EDGE, abs=1e-9)
    assert result.gap_width == pytest.approx(GAP_WIDTH, abs=1e-9)
    assert result.upper_gap_edge == pytest.approx(2.0 - LOWER_EDGE, abs=1e-9)
    assert gap_edges(1.0, 2.0) == pytest.approx((LOWER_EDGE, 2.0 - LOWER_EDGE), abs=1e-9)


def test_dispersion_of_equal_indices_has_zero_width_edges():
    """A homogeneous crystal has touching bands and no gap."""
    result = dispersion(1.5, 1.5)
    assert result.gaps == []
    assert result.gap_width == 0.0
    assert result.band_edges == pytest.approx([0.0, 1.0, 2.0], abs=1e-6)


def test_group_velocity_vanishes_at_band_edge():
    """Group velocity is undefined in the gap and drops toward the edge."""
    result = dispersion(1.0, 2.0)
    omega = result.frequencies
    in_gap = (omega > LOWER_EDGE) & (omega < 2.0 - LOWER_EDGE)
    assert np.all(np.isnan(result.group_velocity[in_gap]))
    assert np.all(result.bloch_phase.imag[in_gap] > 0)

    below = np.nonzero(omega < LOWER_EDGE)[0][-1]
    reference = np.argmin(np.abs(omega - 0.3))
    assert result.group_velocity[below] < 0.05 * result.group_velocity[reference]


def test_energy_fraction_of_lower_edge_mode():
    """The lower-edge mode keeps about 88% of its energy in the high-index layers."""
    cell = unit_cell(quarter_wave(2))
    high = energy_fraction(cell, 1)
    low = energy_fraction(cell, 0)
    assert 0.85 < high < 0.92
    assert high + low == pytest.approx(1.0, abs=1e-5)
