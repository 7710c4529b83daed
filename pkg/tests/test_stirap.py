"""
Tests for the three-level STIRAP simulation.
"""

import math

import numpy as np
import pytest

from errors import PreconditionError
from schemas import PulsePair, ThreeLevelSystem
from stirap import (
    adiabaticity_check,
    adiabaticity_scan,
    best_separation,
    default_horizon,
    evolve,
    pulse_envelope,
    separation_scan,
    transfer_efficiency,
)


def rk4_final_state(system, pair, steps=20000):
    """Fixed-step RK4 reference integrator over the default horizon."""
    start, end = default_horizon(pair)
    dt = (end - start) / steps

    def derivative(t, psi):
        w13, w23 = pulse_envelope(pair, t)
        h = np.array([
            [0.0, 0.0, w13 / 2],
            [0.0, -0.5j * system.gamma2, w23 / 2],
            [w13 / 2, w23 / 2, -system.detuning - 0.5j * system.gamma3],
        ])
        return -1j * h @ psi

    psi = np.array([1.0, 0.0, 0.0], dtype=complex)
    t = start
    for _ in range(steps):
        k1 = derivative(t, psi)
        k2 = derivative(t + dt / 2, psi + dt / 2 * k1)
        k3 = derivative(t + dt / 2, psi + dt / 2 * k2)
        k4 = derivative(t + dt, psi + dt * k3)
        psi = psi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
    return psi


def test_envelope_peaks_and_ordering():
    """Stokes peaks first in the counterintuitive order."""
    pair = PulsePair(omega13_peak=3.0, omega23_peak=5.0, tau=2.0, separation=2.0)
    w13, w23 = pulse_envelope(pair, -1.0)
    assert w23 == 5.0
    w13, w23 = pulse_envelope(pair, 1.0)
    assert w13 == 3.0


def test_envelopes_meet_midway():
    """Halfway between the peaks both envelopes sit at exp(-1/4) of their maxima."""
    pair = PulsePair(omega13_peak=3.0, omega23_peak=6.0, tau=1.0, separation=1.0)
    w13, w23 = pulse_envelope(pair, 0.0)
    assert w13 == pytest.approx(3.0 * math.exp(-0.25))
    assert w23 == pytest.approx(6.0 * math.exp(-0.25))
    assert w13 / w23 == pytest.approx(0.5)


def test_envelopes_vanish_far_away(pair_a20):
    """Both envelopes are negligible far from the pulse centre."""
    w13, w23 = pulse_envelope(pair_a20, 1e3)
    assert w13 == 0.0 and w23 == 0.0


def test_intuitive_ordering_switches_pump_first():
    """Intuitive ordering puts the pump first."""
    pair = PulsePair(omega13_peak=1.0, omega23_peak=1.0, tau=1.0, separation=2.0, ordering="intuitive")
    w13, _ = pulse_envelope(pair, -1.0)
    assert w13 == 1.0


def test_no_coupling_keeps_ground_state(decaying_system):
    """Without pulses the system stays in |1>."""
    pair = PulsePair(omega13_peak=0.0, omega23_peak=0.0, tau=1.0, separation=1.0)
    trajectory = evolve(decaying_system, pair)
    np.testing.assert_allclose(trajectory.p1, 1.0, atol=1e-12)
    assert transfer_efficiency(decaying_system, pair) == 0.0


def test_counterintuitive_transfer_is_efficient(decaying_system, pair_a20):
    """Counterintuitive pulses transfer almost all population to |2>."""
    trajectory = evolve(decaying_system, pair_a20)
    assert trajectory.final_p2 > 0.95


def test_intuitive_ordering_is_worse(decaying_system, pair_a20):
    """Intuitive ordering loses population through |3>."""
    reversed_pair = pair_a20.model_copy(update={"ordering": "intuitive"})
    good = evolve(decaying_system, pair_a20)
    bad = evolve(decaying_system, reversed_pair)
    assert bad.final_p2 < good.final_p2 - 0.1
    assert bad.final_loss > good.final_loss + 0.1


def test_matches_fixed_step_reference(decaying_system, pair_a20):
    """The adaptive integrator agrees with a fine fixed-step solution."""
    psi = rk4_final_state(decaying_system, pair_a20)
    trajectory = evolve(decaying_system, pair_a20)
    assert trajectory.final_p2 == pytest.approx(abs(psi[1]) ** 2, abs=1e-6)
    assert trajectory.final_loss == pytest.approx(1 - np.sum(np.abs(psi) ** 2), abs=1e-6)


def test_norm_accounting(decaying_system, pair_a20):
    """Lost norm equals the population decayed from |3>."""
    trajectory = evolve(decaying_system, pair_a20, tol=1e-8)
    total = trajectory.p1 + trajectory.p2 + trajectory.p3 + trajectory.loss
    np.testing.assert_allclose(total, 1.0, atol=1e-7)
    for values in (trajectory.p1, trajectory.p2, trajectory.p3, trajectory.loss):
        assert np.all((values >= 0) & (values <= 1))


def test_unitary_limit_conserves_population(pair_a20):
    """Without decay the norm stays 1."""
    trajectory = evolve(ThreeLevelSystem(), pair_a20, tol=1e-8)
    assert np.max(trajectory.loss) < 1e-7


def test_dark_state_is_followed(decaying_system, pair_a20):
    """The state tracks the dark state throughout the transfer."""
    trajectory = evolve(decaying_system, pair_a20)
    window = np.abs(trajectory.times) <= pair_a20.separation / 2
    assert np.min(trajectory.dark_state_overlap[window]) >= 0.9


def test_relabeled_levels_give_identical_transfer():
    """The mirrored pulse pair started from |2> reproduces the forward transfer."""
    system = ThreeLevelSystem()
    pair = PulsePair(omega13_peak=12.0, omega23_peak=16.0, tau=1.0, separation=1.0)
    mirrored = PulsePair(omega13_peak=16.0, omega23_peak=12.0, tau=1.0, separation=1.0, ordering="intuitive")
    forward = evolve(system, pair)
    backward = evolve(system, mirrored, initial_state=2)
    assert backward.p1[-1] == pytest.approx(forward.final_p2, abs=1e-6)


def test_tolerance_convergence(decaying_system, pair_a20):
    """Tightening the tolerance changes the result very little."""
    coarse = transfer_efficiency(decaying_system, pair_a20, tol=1e-6)
    fine = transfer_efficiency(decaying_system, pair_a20, tol=5e-7)
    assert abs(coarse - fine) < 1e-6


def test_short_horizon_is_rejected(decaying_system, pair_a20):
    """The time window must cover both pulses."""
    start, end = default_horizon(pair_a20)
    with pytest.raises(PreconditionError):
        evolve(decaying_system, pair_a20, horizon=(start + 1.0, end))


def test_bad_initial_state_is_rejected(decaying_system, pair_a20):
    """The initial state must be a normalized 3-vector."""
    with pytest.raises(PreconditionError):
        evolve(decaying_system, pair_a20, initial_state=3)


def test_efficiency_grows_with_adiabaticity(decaying_system):
    """Larger pulse area gives better transfer."""
    scan = adiabaticity_scan(decaying_system, [5.0, 20.0], tau=1.0, separation=1.0)
    assert scan[1][1] > scan[0][1]


def test_best_separation_is_about_tau(decaying_system):
    """Transfer is best for a separation near tau."""
    scan = separation_scan(decaying_system, 20.0, 1.0, np.linspace(0.2, 3.0, 15))
    best_s, best_p2 = best_separation(scan)
    assert 0.5 <= best_s <= 2.0
    assert best_p2 > 0.95


def test_adiabaticity_check():
    """The adiabaticity check flags weak pulses."""
    area, satisfied = adiabaticity_check(
        PulsePair(omega13_peak=20 * math.pi, omega23_peak=20 * math.pi, tau=1.0, separation=1.0)
    )
    assert area == pytest.approx(2 * math.pi * 10 * math.sqrt(2))
    assert satisfied

    assert adiabaticity_check(PulsePair(omega13_peak=10.0, omega23_peak=0.0, tau=1.0, separation=1.0)) == (10.0, False)
    assert adiabaticity_check(PulsePair(omega13_peak=0.0, omega23_peak=0.0, tau=1.0, separation=1.0)) == (0.0, False)


def test_from_adiabaticity_round_trip():
    """A pair built from an area reports that area back."""
    pair = PulsePair.from_adiabaticity(20.0, tau=2.0, separation=2.0)
    area, _ = adiabaticity_check(pair)
    assert area == pytest.approx(20.0)
    assert pair.omega13_peak == pair.omega23_peak
