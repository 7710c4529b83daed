"""
Constructors and transformations for 1D multilayer dielectric stacks.

Lengths are in units of c/w0 and frequencies in units of w0, so a
quarter-wave layer of index n at the mid-gap frequency has thickness pi/(2n).
"""

import hashlib
import json
import math
from typing import List, Tuple

import numpy as np

from errors import InvalidParameterError
from logger import logger
from schemas import EmitterAnchor, Layer, LayerSelector, QuarterWaveSpec, Stack


def quarter_wave_thickness(n: float, midgap_frequency: float = 1.0) -> float:
    """Thickness giving n*d = (pi/2) c/w0."""
    return (math.pi / 2.0) / (n * midgap_frequency)


def build_quarter_wave(spec: QuarterWaveSpec) -> Stack:
    """
    Build the periodic quarter-wave stack, low-index layer first.

    num_periods counts double layers, so N periods give 2N layers.

    Args:
        spec: Validated quarter-wave specification

    Returns:
        Stack without emitter anchor
    """
    low = Layer(n=spec.n_low, d=quarter_wave_thickness(spec.n_low, spec.midgap_frequency))
    high = Layer(n=spec.n_high, d=quarter_wave_thickness(spec.n_high, spec.midgap_frequency))
    layers = (low, high) * spec.num_periods
    logger.debug(f"Built quarter-wave stack: {spec.num_periods} periods, n=({spec.n_low}, {spec.n_high})")
    return Stack(layers=layers)


def build_layer_count_stack(n_low: float, n_high: float, num_layers: int) -> Stack:
    """
    Quarter-wave stack counted in single layers (low, high, low, ...).

    This is the "29-layer" reading of the structure, where an odd count ends
    on a low-index layer.
    """
    if num_layers < 1:
        raise InvalidParameterError(f"num_layers must be positive, got {num_layers}")
    spec = QuarterWaveSpec(n_low=n_low, n_high=n_high, num_periods=1)
    pair = build_quarter_wave(spec).layers
    return Stack(layers=tuple(pair[i % 2] for i in range(num_layers)))


def layer_boundaries(stack: Stack) -> np.ndarray:
    """Interface positions z_0=0, z_1, ..., z_L (physical length units)."""
    thicknesses = [layer.thickness for layer in stack.layers]
    return np.concatenate(([0.0], np.cumsum(thicknesses)))


def optical_thicknesses(stack: Stack, midgap_frequency: float = 1.0) -> np.ndarray:
    """n*d*w0/c for every layer."""
    return np.array([layer.optical_thickness * midgap_frequency for layer in stack.layers])


def anchor_position(stack: Stack) -> float:
    """Physical coordinate of the emitter anchor measured from the left surface."""
    if stack.emitter_anchor is None:
        raise InvalidParameterError("stack has no emitter anchor")
    anchor = stack.emitter_anchor
    bounds = layer_boundaries(stack)
    return float(bounds[anchor.layer] + anchor.offset * stack.layers[anchor.layer].thickness)


def place_emitter_midstack(stack: Stack) -> Stack:
    """
    Anchor the emitter at the center of the high-index layer nearest the
    geometric midpoint of the stack.

    Ties on distance go to the layer whose center is closer, then to the
    lower index.
    """
    if not stack.layers:
        raise InvalidParameterError("cannot place an emitter in an empty stack")

    bounds = layer_boundaries(stack)
    midpoint = bounds[-1] / 2.0
    n_max = max(layer.refractive_index for layer in stack.layers)

    candidates = []
    for index, layer in enumerate(stack.layers):
        if layer.refractive_index != n_max:
            continue
        left, right = bounds[index], bounds[index + 1]
        gap = max(left - midpoint, midpoint - right, 0.0)
        center_gap = abs(0.5 * (left + right) - midpoint)
        candidates.append((gap, center_gap, index))

    _, _, chosen = min(candidates)
    return Stack(layers=stack.layers, emitter=EmitterAnchor(layer=chosen, offset=0.5))


def with_anchor(stack: Stack, layer: int, offset: float = 0.5) -> Stack:
    """Copy of the stack with the emitter at an explicit position."""
    return Stack(layers=stack.layers, emitter=EmitterAnchor(layer=layer, offset=offset))


def selected_layers(stack: Stack, which: LayerSelector) -> List[int]:
    """
    Indices of the high-index, low-index, or all layers.

    Layers are classified by their unshifted index, so a Kerr shift never
    changes which layers a selector picks.
    """
    if not stack.layers:
        return []
    indices = [layer.unshifted_index for layer in stack.layers]
    if which == "all":
        return list(range(len(indices)))
    target = max(indices) if which == "high" else min(indices)
    return [i for i, n in enumerate(indices) if n == target]


def apply_index_shift(stack: Stack, delta_n: float, which: LayerSelector = "high") -> Stack:
    """
    Return a copy with the refractive index of the selected layers changed by
    delta_n. Thicknesses and the emitter anchor are kept.

    Shifts accumulate on top of the recorded unshifted index; once they sum to
    zero the original layer is restored.

    Raises:
        InvalidParameterError: if any shifted index would fall below 1
    """
    if which not in ("high", "low", "all"):
        raise InvalidParameterError(f"unknown layer selector: {which}")
    if delta_n == 0.0:
        return stack

    chosen = set(selected_layers(stack, which))
    layers = []
    for index, layer in enumerate(stack.layers):
        if index not in chosen:
            layers.append(layer)
            continue
        base = layer.unshifted_index
        total = (layer.index_shift or 0.0) + delta_n
        if total == 0.0:
            layers.append(Layer(n=base, d=layer.thickness))
            continue
        shifted = base + total
        if shifted < 1.0:
            raise InvalidParameterError(
                f"index shift {delta_n} drives layer {index} to n={shifted} < 1"
            )
        layers.append(Layer(n=shifted, d=layer.thickness, n0=base, dn=total))
    return Stack(layers=tuple(layers), emitter=stack.emitter_anchor)


def unit_cell(stack: Stack) -> Tuple[Layer, Layer]:
    """
    The two-layer unit cell of a periodic stack.

    Raises:
        InvalidParameterError: if the stack is not a repetition of its first two layers
    """
    if len(stack.layers) < 2:
        raise InvalidParameterError("a periodic stack needs at least two layers")
    first, second = stack.layers[0], stack.layers[1]
    for index, layer in enumerate(stack.layers):
        expected = first if index % 2 == 0 else second
        if not (math.isclose(layer.refractive_index, expected.refractive_index, rel_tol=1e-12)
                and math.isclose(layer.thickness, expected.thickness, rel_tol=1e-12)):
            raise InvalidParameterError(f"stack is not periodic at layer {index}")
    return first, second

def stack_to_json(stack: Stack) -> str:
    """
    Serialize as {"layers":[{"n":..,"d":..}], "emitter":{"layer":i,"offset":x}}.

    Kerr-shifted layers also carry "n0" and "dn".
    """
    data = stack.model_dump(by_alias=True)
    data["layers"] = [{key: value for key, value in layer.items() if value is not None} for layer in data["layers"]]
    return json.dumps(data, sort_keys=True)


def stack_from_json(text: str) -> Stack:
    return Stack.model_validate_json(text)


def stack_hash(stack: Stack) -> str:
    """Short content hash used for provenance in exported files."""
    return hashlib.md5(stack_to_json(stack).encode()).hexdigest()[:12]
