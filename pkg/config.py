"""
Configuration management for the photon gun simulator.
Numerical defaults live here as typed class attributes; only logging
settings may be taken from the environment.
"""

import os
from pathlib import Path
from typing import Optional

import numpy as np


class Config:
    """Application configuration."""

    # Base settings
    PROJECT_NAME: str = "Band-Edge Photon Gun Simulator"
    VERSION: str = "1.0.0"

    # Frequency grid (units of the mid-gap frequency w0)
    GRID_POINTS: int = 20001
    GRID_MAX: float = 2.0
    PEAK_REFINE_FACTOR: int = 100
    PEAK_REFINE_HALFWIDTH: float = 0.005
    PEAK_WINDOW_LOW: float = 0.5
    PEAK_EDGE_GUARD: float = 1e-6
    PEAK_SCAN_STEP: float = 1e-4
    FINITE_DIFF_STEP: float = 1e-6

    # LDOS low-frequency reference window
    LDOS_REFERENCE_LOW: float = 0.05
    LDOS_REFERENCE_HIGH: float = 0.15
    LDOS_REFERENCE_POINTS: int = 4001

    # STIRAP integration
    STIRAP_TOL: float = 1e-8
    STIRAP_HORIZON_WIDTHS: float = 4.0
    STIRAP_SAMPLES: int = 801
    ADIABATICITY_THRESHOLD: float = 10.0
    ER_BRANCHING_RATIO: float = 6.0

    # Emitter (Er3+ 4I13/2 -> 4I15/2)
    EMITTER_FREQUENCY: float = 0.781
    EMITTER_LIFETIME_S: float = 1e-3
    EMITTER_LINEWIDTH: float = 1e-4
    EMITTER_WAVELENGTH_M: float = 1.55e-6
    LINE_WINDOW_WIDTHS: float = 3.0
    LINE_QUADRATURE_POINTS: int = 601

    # Rate model
    PUMP_REP_RATE_HZ: float = 100e6
    EMISSION_TARGET: float = 0.99

    # Kerr switching
    KERR_OFF_THRESHOLD: float = 0.05
    KERR_ON_FRACTION: float = 0.5
    KERR_MAX_RELATIVE_SHIFT: float = 0.1
    KERR_SCAN_STEP: float = 1e-4
    KERR_TOLERANCE: float = 1e-5
    KERR_PERIODS: int = 39

    # Parallel sweeps (1 = sequential); the CLI overrides it with --workers
    SWEEP_WORKERS: int = 1

    # Logging configuration
    LOG_LEVEL: str = os.getenv("PHOTON_GUN_LOG_LEVEL", "WARNING")
    LOG_DIR: Optional[Path] = (
        Path(os.environ["PHOTON_GUN_LOG_DIR"]) if os.getenv("PHOTON_GUN_LOG_DIR") else None
    )
    LOG_FILE: str = "photon_gun.log"
    LOG_MAX_BYTES: int = 10 * 1024 * 1024  # 10MB
    LOG_BACKUP_COUNT: int = 5

    @classmethod
    def ensure_directories(cls):
        """Create the log directory if file logging is enabled."""
        if cls.LOG_DIR is not None:
            cls.LOG_DIR.mkdir(parents=True, exist_ok=True)

    @classmethod
    def default_grid(cls) -> np.ndarray:
        """Default frequency grid on (0, GRID_MAX), endpoints excluded."""
        grid = np.linspace(0.0, cls.GRID_MAX, cls.GRID_POINTS + 2)
        return grid[1:-1]

    @classmethod
    def reference_grid(cls) -> np.ndarray:
        """Grid used for the low-frequency LDOS reference average."""
        return np.linspace(cls.LDOS_REFERENCE_LOW, cls.LDOS_REFERENCE_HIGH, cls.LDOS_REFERENCE_POINTS)
