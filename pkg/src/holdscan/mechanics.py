"""Static respiratory mechanics from detected holds.

During an inspiratory hold, flow is zero, so airway pressure equals alveolar
pressure and the textbook single-compartment estimates apply:

    compliance  C = tidal_volume / (plateau_pressure - PEEP)     [L/cmH2O]
    resistance  R = (peak_pressure - plateau_pressure) / flow    [cmH2O/(L/s)]

where flow is the end-inspiratory flow just before the hold.  Everything else
in this module is plumbing to pull those five numbers out of a waveform and a
detected segment.  The where-to-read-from choices are heuristics, flagged in
the report output: peak pressure and last positive flow come from a 1.0 s
window before the hold, tidal volume from the volume rise over a 5.0 s
lookback, and PEEP (when not supplied) from a low percentile of the lookback
pressure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDrivingPressure,
    DegenerateFlow,
    InvalidConfig,
    InvalidRange,
    NonFiniteInput,
)
from .waveform import Waveform, validate_waveform

_trapezoid = getattr(np, "trapezoid", None) or np.trapz  # numpy < 2 fallback

# Pre-hold window for peak pressure and end-inspiratory flow, seconds.
PRE_WINDOW_S = 1.0
# Lookback for tidal volume and the PEEP percentile estimate, seconds.
VOLUME_LOOKBACK_S = 5.0
# Percentile of lookback pressure used as the PEEP estimate.
PEEP_PERCENTILE = 10.0

# Human-readable note attached to every CLI report record.
HEURISTICS_NOTE = (
    f"heuristic inputs: peak pressure and last positive flow from the {PRE_WINDOW_S} s "
    f"window before the hold; tidal volume and PEEP percentile from a {VOLUME_LOOKBACK_S} s lookback"
)


@dataclass(frozen=True)
class MechanicsInput:
    plateau_pressure: float  # cmH2O
    peak_pressure: float  # cmH2O
    peep: float  # cmH2O
    tidal_volume: float  # L
    end_inspiratory_flow: float  # L/s

    def __post_init__(self) -> None:
        for name in (
            "plateau_pressure",
            "peak_pressure",
            "peep",
            "tidal_volume",
            "end_inspiratory_flow",
        ):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise NonFiniteInput(f"{name} must be finite, got {v}")


@dataclass(frozen=True)
class MechanicsEstimate:
    compliance: float  # L/cmH2O
    resistance: float  # cmH2O/(L/s)


def integrate_volume(w: Waveform, start_index: int, end_index_exclusive: int) -> float:
    """Trapezoidal integral of flow over [start, end), in litres."""
    validate_waveform(w)
    if not (0 <= start_index < end_index_exclusive <= len(w)):
        raise InvalidRange(
            f"window [{start_index}, {end_index_exclusive}) out of bounds for {len(w)} samples"
        )
    sl = slice(start_index, end_index_exclusive)
    return float(_trapezoid(w.flow[sl] / 60.0, w.t[sl]))


def estimate_compliance(inputs: MechanicsInput) -> float:
    """Static compliance; needs a positive driving pressure and tidal volume."""
    if inputs.plateau_pressure <= inputs.peep:
        raise DegenerateDrivingPressure(
            f"plateau pressure {inputs.plateau_pressure} cmH2O does not exceed "
            f"PEEP {inputs.peep} cmH2O"
        )
    if inputs.tidal_volume <= 0:
        raise InvalidConfig(f"tidal_volume must be positive, got {inputs.tidal_volume}")
    return inputs.tidal_volume / (inputs.plateau_pressure - inputs.peep)


def estimate_resistance(inputs: MechanicsInput) -> float:
    """Airway resistance from the peak-to-plateau pressure drop."""
    if inputs.end_inspiratory_flow <= 0:
        raise DegenerateFlow(
            f"end-inspiratory flow must be positive, got {inputs.end_inspiratory_flow} L/s"
        )
    return (inputs.peak_pressure - inputs.plateau_pressure) / inputs.end_inspiratory_flow


def _window_before(w: Waveform, index: int, window_s: float) -> slice | None:
    lo = max(0, index - int(round(window_s * w.sample_rate_hz)))
    if lo >= index:
        return None
    return slice(lo, index)


def peak_pressure_before(w: Waveform, index: int, window_s: float = PRE_WINDOW_S) -> float | None:
    """Maximum pressure in the window before ``index``; None if empty."""
    sl = _window_before(w, index, window_s)
    if sl is None:
        return None
    return float(np.max(w.pressure[sl]))


def last_positive_flow_before(
    w: Waveform, index: int, window_s: float = PRE_WINDOW_S
) -> float | None:
    """Last strictly positive flow in the window, converted to L/s."""
    sl = _window_before(w, index, window_s)
    if sl is None:
        return None
    window = w.flow[sl]
    positive = np.flatnonzero(window > 0)
    if len(positive) == 0:
        return None
    return float(window[positive[-1]]) / 60.0


def tidal_volume_before(
    w: Waveform, index: int, lookback_s: float = VOLUME_LOOKBACK_S
) -> float | None:
    """Volume rise from the lookback minimum to ``index``; None if not positive.

    Uses the recorded volume channel when present, otherwise integrates flow
    over the lookback.  The minimum tracks the start of the last inspiration,
    so the rise is the delivered tidal volume.
    """
    if index < 0 or index >= len(w):
        raise InvalidRange(f"index {index} out of bounds for {len(w)} samples")
    lo = max(0, index - int(round(lookback_s * w.sample_rate_hz)))
    if w.volume is not None:
        vol = w.volume[lo : index + 1]
    else:
        sl = slice(lo, index + 1)
        flow_lps = w.flow[sl] / 60.0
        dt = np.diff(w.t[sl])
        vol = np.concatenate(([0.0], np.cumsum(dt * 0.5 * (flow_lps[1:] + flow_lps[:-1]))))
    rise = float(vol[-1] - np.min(vol))
    if rise <= 0:
        return None
    return rise


def peep_estimate(
    w: Waveform,
    index: int,
    lookback_s: float = VOLUME_LOOKBACK_S,
    percentile: float = PEEP_PERCENTILE,
) -> float:
    """Low percentile of pre-hold pressure as the PEEP baseline."""
    lo = max(0, index - int(round(lookback_s * w.sample_rate_hz)))
    window = w.pressure[lo : index + 1]
    return float(np.percentile(window, percentile))
