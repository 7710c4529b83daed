"""
Pydantic schemas for the simulator's parameter and report types.

All models are frozen: values are immutable after construction and safe to
share between sweep workers.
"""

from typing import Any, Dict, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from config import Config

LayerSelector = Literal["high", "low", "all"]
PulseOrdering = Literal["counterintuitive", "intuitive"]
OutputFormat = Literal["csv", "json"]


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True, allow_inf_nan=False)


class Layer(_Frozen):
    """
    Single dielectric layer; thickness in units of c/w0.

    A Kerr-shifted layer also records its unshifted index and the accumulated
    shift, so the shift can be undone exactly.
    """
    refractive_index: float = Field(..., ge=1.0, alias="n")
    thickness: float = Field(..., gt=0.0, alias="d")
    base_index: Optional[float] = Field(None, ge=1.0, alias="n0")
    index_shift: Optional[float] = Field(None, alias="dn")

    @model_validator(mode="after")
    def _shift_is_recorded_in_full(self) -> "Layer":
        if (self.base_index is None) != (self.index_shift is None):
            raise ValueError("base_index and index_shift must be given together")
        return self

    @property
    def unshifted_index(self) -> float:
        return self.refractive_index if self.base_index is None else self.base_index

    @property
    def optical_thickness(self) -> float:
        return self.refractive_index * self.thickness


class EmitterAnchor(_Frozen):
    """Emitter position as (layer index, fractional offset inside the layer)."""
    layer: int = Field(..., ge=0)
    offset: float = Field(0.5, ge=0.0, le=1.0)


class QuarterWaveSpec(_Frozen):
    """Periodic low/high stack with quarter-wave layers at the mid-gap frequency."""
    n_low: float = Field(..., ge=1.0)
    n_high: float = Field(..., ge=1.0)
    num_periods: int = Field(..., ge=1)
    midgap_frequency: float = Field(1.0, gt=0.0)


class Stack(_Frozen):
    """Ordered layer list between vacuum half-spaces, plus an optional emitter anchor."""
    layers: Tuple[Layer, ...] = ()
    emitter_anchor: Optional[EmitterAnchor] = Field(None, alias="emitter")

    @model_validator(mode="after")
    def _anchor_in_range(self) -> "Stack":
        if self.emitter_anchor is not None and self.emitter_anchor.layer >= len(self.layers):
            raise ValueError(
                f"emitter anchor layer {self.emitter_anchor.layer} outside stack of {len(self.layers)} layers"
            )
        return self

    @property
    def total_thickness(self) -> float:
        return sum(layer.thickness for layer in self.layers)

    @property
    def optical_length(self) -> float:
        return sum(layer.optical_thickness for layer in self.layers)


class ThreeLevelSystem(_Frozen):
    """Lambda system |1>, |2> coupled through the decaying level |3>."""
    gamma3: float = Field(0.0, ge=0.0)
    branching_ratio: float = Field(Config.ER_BRANCHING_RATIO, gt=0.0)
    detuning: float = 0.0
    gamma2: float = Field(0.0, ge=0.0)


class PulsePair(_Frozen):
    """Two Gaussian pulses of common width tau, peaks separated by `separation`."""
    omega13_peak: float = Field(..., ge=0.0)
    omega23_peak: float = Field(..., ge=0.0)
    tau: float = Field(..., gt=0.0)
    separation: float = Field(..., ge=0.0)
    ordering: PulseOrdering = "counterintuitive"

    @classmethod
    def from_adiabaticity(
        cls,
        area: float,
        tau: float,
        separation: float,
        ordering: PulseOrdering = "counterintuitive",
    ) -> "PulsePair":
        """Equal-peak pair whose adiabaticity parameter equals `area`."""
        peak = area / (tau * 2 ** 0.5)
        return cls(omega13_peak=peak, omega23_peak=peak, tau=tau, separation=separation, ordering=ordering)


class EmitterModel(_Frozen):
    """Er3+-like transition in dimensionless frequency units."""
    transition_frequency: float = Field(Config.EMITTER_FREQUENCY, gt=0.0)
    bulk_lifetime: float = Field(Config.EMITTER_LIFETIME_S, gt=0.0)
    linewidth: float = Field(Config.EMITTER_LINEWIDTH, gt=0.0)
    line_shape: Literal["lorentzian"] = "lorentzian"
    label: str = "Er3+ 4I13/2 -> 4I15/2"


class RateReport(_Frozen):
    """Enhanced decay and repetition-rate figures; rates in 1/s."""
    enhancement: float = Field(..., ge=0.0)
    bulk_lifetime: float = Field(..., gt=0.0)
    enhanced_rate: float = Field(..., ge=0.0)
    pump_rep_rate: float = Field(..., gt=0.0)
    device_rep_rate: float = Field(..., ge=0.0)
    emission_probability_target: float = Field(..., gt=0.0, lt=1.0)
    stirap_duration: float = Field(0.0, ge=0.0)
    cycle_wait: float = Field(..., gt=0.0)

    @model_validator(mode="after")
    def _device_not_faster_than_pump(self) -> "RateReport":
        if self.device_rep_rate > self.pump_rep_rate:
            raise ValueError("device repetition rate exceeds pump repetition rate")
        return self


class PhotonEventRecord(_Frozen):
    """One trigger cycle; emission_time is None when nothing was emitted in the cycle."""
    cycle_index: int = Field(..., ge=0)
    trigger_time: float
    emission_time: Optional[float] = None

    @model_validator(mode="after")
    def _emission_after_trigger(self) -> "PhotonEventRecord":
        if self.emission_time is not None and self.emission_time < self.trigger_time:
            raise ValueError("emission_time precedes trigger_time")
        return self

    @property
    def delay(self) -> Optional[float]:
        if self.emission_time is None:
            return None
        return self.emission_time - self.trigger_time


class SwitchCriterion(_Frozen):
    """
    ON/OFF thresholds on the line-averaged LDOS at the emitter frequency.

    When on_threshold is None it resolves to on_fraction times the line-averaged
    LDOS at the unshifted band-edge peak.
    """
    off_threshold: float = Field(Config.KERR_OFF_THRESHOLD, gt=0.0)
    on_threshold: Optional[float] = Field(None, gt=0.0)
    on_fraction: float = Field(Config.KERR_ON_FRACTION, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def _off_below_on(self) -> "SwitchCriterion":
        if self.on_threshold is not None and self.off_threshold >= self.on_threshold:
            raise ValueError(
                f"off_threshold ({self.off_threshold}) must be below on_threshold ({self.on_threshold})"
            )
        return self


class SwitchResult(_Frozen):
    """Outcome of the Kerr switching search."""
    delta_n_required: float
    delta_n_over_n: float
    edge_shift: float
    emitter_frequency: float
    selector: LayerSelector
    num_periods: int
    criterion_used: SwitchCriterion
    ldos_unshifted: float
    ldos_at_required: float
    ldos_at_90_percent: float


class RunConfig(_Frozen):
    """Resolved configuration for one CLI run; echoed to run.json."""
    subcommand: Literal["dos", "dispersion", "stirap", "rate", "kerr"]
    out_dir: str
    seed: int = 0
    format: OutputFormat = "csv"
    params: Dict[str, Any] = Field(default_factory=dict)
    version: str = Config.VERSION
