"""
Pytest configuration and fixtures for photon gun simulator tests.
"""

import os

import pytest

# Keep test output quiet regardless of the caller's environment
os.environ["PHOTON_GUN_LOG_LEVEL"] = "WARNING"

from schemas import EmitterModel, PulsePair, QuarterWaveSpec, ThreeLevelSystem
from stack import build_quarter_wave, place_emitter_midstack


@pytest.fixture(scope="session")
def spec_29():
    """The 29-period (1, 2) quarter-wave stack."""
    return QuarterWaveSpec(n_low=1.0, n_high=2.0, num_periods=29)


@pytest.fixture(scope="session")
def stack_29(spec_29):
    """29-period stack with the emitter in the middle high-index layer."""
    return place_emitter_midstack(build_quarter_wave(spec_29))


@pytest.fixture(scope="session")
def stack_10():
    return place_emitter_midstack(build_quarter_wave(QuarterWaveSpec(n_low=1.0, n_high=2.0, num_periods=10)))


@pytest.fixture
def emitter():
    """Default Er3+ line: 1 ms lifetime, linewidth 1e-4."""
    return EmitterModel()


@pytest.fixture
def decaying_system():
    """Intermediate level decaying at 1/tau for tau = 1."""
    return ThreeLevelSystem(gamma3=1.0)


@pytest.fixture
def pair_a20():
    """Counterintuitive pair with adiabaticity 20 and separation tau."""
    return PulsePair.from_adiabaticity(20.0, tau=1.0, separation=1.0)


@pytest.fixture
def out_dir(tmp_path):
    """Temporary output directory for pipeline and CLI runs."""
    path = tmp_path / "out"
    path.mkdir()
    return path
