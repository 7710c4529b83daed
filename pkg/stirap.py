"""
Stimulated Raman adiabatic passage in a three-level lambda system.

Levels: |1> (ground), |2> (target, metastable), |3> (decaying intermediate).
Pump Omega13 couples 1-3, Stokes Omega23 couples 2-3. In the rotating frame
with two-photon resonance,

    H = [[0, 0, W13/2], [0, -i G2/2, W23/2], [W13/2, W23/2, -D - i G3/2]]

and i dpsi/dt = H psi. Decay leaves the manifold; loss = 1 - |psi|^2.
Time and rates share one arbitrary unit (e.g. ns and rad/ns).
"""

from dataclasses import dataclass
from functools import partial
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from config import Config
from errors import NumericalError, PreconditionError
from logger import logger
from schemas import PulseOrdering, PulsePair, ThreeLevelSystem
from sweeps import run_sweep

Horizon = Tuple[float, float]


@dataclass(frozen=True)
class PopulationTrajectory:
    times: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    p3: np.ndarray
    loss: np.ndarray
    dark_state_overlap: np.ndarray

    @property
    def final_p2(self) -> float:
        return float(self.p2[-1])

    @property
    def final_loss(self) -> float:
        return float(self.loss[-1])

    def rows(self) -> List[Tuple[float, ...]]:
        """(t, p1, p2, p3, loss, dark_overlap) per recorded time."""
        columns = (self.times, self.p1, self.p2, self.p3, self.loss, self.dark_state_overlap)
        return [tuple(float(c[i]) for c in columns) for i in range(self.times.size)]


def pulse_centers(pair: PulsePair) -> Tuple[float, float]:
    """(t13, t23); counterintuitive ordering switches Omega23 on first."""
    half = pair.separation / 2.0
    if pair.ordering == "counterintuitive":
        return half, -half
    return -half, half


def pulse_envelope(pair: PulsePair, t):
    """
    Gaussian Rabi envelopes W(t) = W_peak exp(-(t - t_c)^2 / tau^2).

    Args:
        pair: Pulse pair
        t: Time or array of times

    Returns:
        (Omega13(t), Omega23(t))
    """
    t13, t23 = pulse_centers(pair)
    omega13 = pair.omega13_peak * np.exp(-((t - t13) / pair.tau) ** 2)
    omega23 = pair.omega23_peak * np.exp(-((t - t23) / pair.tau) ** 2)
    return omega13, omega23


def default_horizon(pair: PulsePair) -> Horizon:
    centers = pulse_centers(pair)
    pad = Config.STIRAP_HORIZON_WIDTHS * pair.tau
    return min(centers) - pad, max(centers) + pad


def adiabaticity_check(pair: PulsePair) -> Tuple[float, bool]:
    """A = tau * sqrt(W13^2 + W23^2); satisfied only when A > 10 strictly."""
    area = pair.tau * float(np.hypot(pair.omega13_peak, pair.omega23_peak))
    return area, area > Config.ADIABATICITY_THRESHOLD


def _hamiltonian(system: ThreeLevelSystem, omega13: float, omega23: float) -> np.ndarray:
    return np.array([
        [0.0, 0.0, omega13 / 2.0],
        [0.0, -0.5j * system.gamma2, omega23 / 2.0],
        [omega13 / 2.0, omega23 / 2.0, -system.detuning - 0.5j * system.gamma3],
    ], dtype=complex)


def _rhs(t: float, psi: np.ndarray, system: ThreeLevelSystem, pair: PulsePair) -> np.ndarray:
    omega13, omega23 = pulse_envelope(pair, t)
    return -1j * (_hamiltonian(system, omega13, omega23) @ psi)


def _check_horizon(pair: PulsePair, horizon: Horizon) -> None:
    required = default_horizon(pair)
    slack = 1e-12 * max(pair.tau, 1.0)
    if horizon[0] > required[0] + slack or horizon[1] < required[1] - slack:
        raise PreconditionError(
            f"horizon {horizon} must cover both pulse centers +/- "
            f"{Config.STIRAP_HORIZON_WIDTHS:g} tau, i.e. {required}"
        )


def evolve(
    system: ThreeLevelSystem,
    pair: PulsePair,
    horizon: Optional[Horizon] = None,
    tol: float = Config.STIRAP_TOL,
    initial_state: int = 1,
    samples: int = Config.STIRAP_SAMPLES,
) -> PopulationTrajectory:
    """
    Integrate the three-level amplitude equations with adaptive DOP853 steps.

    Args:
        system: Level structure and decay rates
        pair: Pulse pair
        horizon: (t_start, t_end); defaults to centers -/+ 4 tau
        tol: Target accuracy of populations
        initial_state: 1 or 2
        samples: Number of recorded times

    Returns:
        PopulationTrajectory with populations, loss and dark-state overlap

    Raises:
        PreconditionError: horizon too short or bad initial state
        NumericalError: integrator failure
    """
    horizon = default_horizon(pair) if horizon is None else tuple(horizon)
    _check_horizon(pair, horizon)
    if initial_state not in (1, 2):
        raise PreconditionError(f"initial_state must be 1 or 2, got {initial_state}")
    if tol <= 0:
        raise PreconditionError("tol must be positive")

    psi0 = np.zeros(3, dtype=complex)
    psi0[initial_state - 1] = 1.0
    times = np.linspace(horizon[0], horizon[1], samples)

    solution = solve_ivp(
        partial(_rhs, system=system, pair=pair),
        horizon,
        psi0,
        method="DOP853",
        t_eval=times,
        rtol=0.01 * tol,
        atol=0.001 * tol,
        max_step=pair.tau / 10.0,
    )
    if not solution.success:
        raise NumericalError(f"STIRAP integration failed: {solution.message}")
    logger.debug(f"STIRAP integration: {solution.nfev} RHS evaluations")

    psi = solution.y
    populations = np.clip(np.abs(psi) ** 2, 0.0, 1.0)
    loss = np.clip(1.0 - populations.sum(axis=0), 0.0, 1.0)

    omega13, omega23 = pulse_envelope(pair, times)
    theta = np.arctan2(omega13, omega23)
    dark = np.abs(np.cos(theta) * psi[0] - np.sin(theta) * psi[1]) ** 2

    return PopulationTrajectory(
        times=times,
        p1=populations[0],
        p2=populations[1],
        p3=populations[2],
        loss=loss,
        dark_state_overlap=np.clip(dark, 0.0, 1.0),
    )


def transfer_efficiency(
    system: ThreeLevelSystem,
    pair: PulsePair,
    horizon: Optional[Horizon] = None,
    tol: float = Config.STIRAP_TOL,
) -> float:
    """Final population of |2> starting from |1>."""
    return evolve(system, pair, horizon, tol).final_p2


def _efficiency_point(point, system: ThreeLevelSystem, tol: float) -> float:
    return transfer_efficiency(system, point, tol=tol)


def separation_scan(
    system: ThreeLevelSystem,
    area: float,
    tau: float,
    separations: Sequence[float],
    ordering: PulseOrdering = "counterintuitive",
    tol: float = Config.STIRAP_TOL,
    workers: Optional[int] = None,
) -> List[Tuple[float, float]]:
    """Transfer efficiency versus peak separation at fixed adiabaticity."""
    pairs = [PulsePair.from_adiabaticity(area, tau, s, ordering) for s in separations]
    efficiencies = run_sweep(partial(_efficiency_point, system=system, tol=tol), pairs, workers)
    return list(zip([float(s) for s in separations], efficiencies))


def adiabaticity_scan(
    system: ThreeLevelSystem,
    areas: Sequence[float],
    tau: float,
    separation: float,
    ordering: PulseOrdering = "counterintuitive",
    tol: float = Config.STIRAP_TOL,
    workers: Optional[int] = None,
) -> List[Tuple[float, float]]:
    """Transfer efficiency versus adiabaticity parameter at fixed separation."""
    pairs = [PulsePair.from_adiabaticity(a, tau, separation, ordering) for a in areas]
    efficiencies = run_sweep(partial(_efficiency_point, system=system, tol=tol), pairs, workers)
    return list(zip([float(a) for a in areas], efficiencies))


def best_separation(scan: List[Tuple[float, float]]) -> Tuple[float, float]:
    return max(scan, key=lambda item: item[1])
