"""Seeded synthetic ventilator waveforms with ground-truth hold annotations.

The breath template is pressure-control shaped: during inspiration the airway
pressure ramps linearly from PEEP to peak pressure while flow decays
exponentially from its peak toward zero; during expiration pressure relaxes
exponentially back to PEEP and flow is negative, decaying to zero.  The
expiratory flow amplitude is scaled by the I:E ratio so inspired and expired
volumes balance per breath.  A configured hold overrides the template (flow
zero, pressure at plateau) without pausing the breath clock, and white
Gaussian noise is added everywhere on both channels.

Randomness is fully specified so the same seed gives the same bytes on any
platform: SplitMix64 in counter mode supplies 64-bit words, and Gaussians
come from the Box-Muller transform (cosine branch only, one variate per pair
of words).  Flow-noise sample i consumes counters (2i, 2i+1); pressure-noise
sample i consumes counters (2n+2i, 2n+2i+1) for an n-sample waveform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig
from .waveform import Waveform, validate_waveform

# Exponential decay constant shared by inspiratory flow and expiratory
# relaxation, in units of breath-phase fraction: the template falls to
# exp(-3) of its initial amplitude by the end of each phase.
DECAY_RATE = 3.0

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class MockConfig:
    duration_s: float = 90.0
    sample_rate_hz: float = 100.0
    respiratory_rate_bpm: float = 15.0
    i_to_e_ratio: float = 0.5  # inspiration:expiration, 0.5 means 1:2
    peak_flow_lpm: float = 60.0
    peep_cmh2o: float = 5.0
    plateau_cmh2o: float = 15.0
    peak_pressure_cmh2o: float = 20.0
    noise_sd_flow: float = 1.0  # L/min
    noise_sd_pressure: float = 1.0  # cmH2O
    holds: tuple[tuple[float, float], ...] = ((45.0, 2.0),)  # (start_s, duration_s)
    rng_seed: int = 0  # 64-bit; wider ints are reduced mod 2**64

    def __post_init__(self) -> None:
        try:
            object.__setattr__(
                self, "holds", tuple((float(s), float(d)) for s, d in self.holds)
            )
        except (TypeError, ValueError) as exc:
            raise InvalidConfig(f"holds must be (start_s, duration_s) pairs: {exc}") from None
        positive = (
            "duration_s",
            "sample_rate_hz",
            "respiratory_rate_bpm",
            "i_to_e_ratio",
            "peak_flow_lpm",
            "peep_cmh2o",
            "plateau_cmh2o",
            "peak_pressure_cmh2o",
        )
        for name in positive:
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0:
                raise InvalidConfig(f"{name} must be positive and finite, got {v}")
        for name in ("noise_sd_flow", "noise_sd_pressure"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise InvalidConfig(f"{name} must be >= 0 and finite, got {v}")
        if not isinstance(self.rng_seed, int):
            raise InvalidConfig(f"rng_seed must be an integer, got {self.rng_seed!r}")
        for start, dur in self.holds:
            if not (math.isfinite(start) and math.isfinite(dur)) or dur <= 0:
                raise InvalidConfig(f"hold ({start}, {dur}) must have positive duration")
            if start < 0 or start + dur > self.duration_s:
                raise InvalidConfig(
                    f"hold ({start}, {dur}) extends outside [0, {self.duration_s}]"
                )
        ordered = sorted(self.holds)
        for prev, cur in zip(ordered, ordered[1:]):
            if cur[0] < prev[0] + prev[1]:
                raise InvalidConfig(f"holds {prev} and {cur} overlap")


@dataclass(frozen=True)
class GroundTruth:
    """True hold intervals as (start_s, end_s), sorted by start."""

    hold_segments: tuple[tuple[float, float], ...]


def _splitmix64(seed: int, first_counter: int, count: int) -> np.ndarray:
    """SplitMix64 outputs for counters [first_counter, first_counter+count)."""
    idx = np.arange(first_counter + 1, first_counter + count + 1, dtype=np.uint64)
    x = np.uint64(seed & _MASK64) + idx * _GAMMA  # wraps mod 2**64
    x = (x ^ (x >> np.uint64(30))) * _MIX1
    x = (x ^ (x >> np.uint64(27))) * _MIX2
    return x ^ (x >> np.uint64(31))


def _standard_normals(seed: int, first_counter: int, count: int) -> np.ndarray:
    """Box-Muller cosine variates from consecutive counter pairs.

    u1 is mapped into (0, 1] so the log never sees zero; u2 into [0, 1).
    """
    words = _splitmix64(seed, first_counter, 2 * count)
    u1 = ((words[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
    u2 = (words[1::2] >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)


def generate_mock_waveform(config: MockConfig = MockConfig()) -> tuple[Waveform, GroundTruth]:
    """Deterministic synthetic recording plus its true hold intervals.

    The volume channel is the cumulative trapezoidal integral of flow
    (L/min converted to L/s), starting at zero.
    """
    n = int(round(config.duration_s * config.sample_rate_hz))
    if n < 1:
        raise InvalidConfig(
            f"duration {config.duration_s} s at {config.sample_rate_hz} Hz yields no samples"
        )
    rate = config.sample_rate_hz
    t = np.arange(n, dtype=np.float64) / rate

    period = 60.0 / config.respiratory_rate_bpm
    t_insp = period * config.i_to_e_ratio / (1.0 + config.i_to_e_ratio)
    t_exp = period - t_insp
    phase = np.mod(t, period)
    insp = phase < t_insp
    u = phase / t_insp  # inspiratory phase fraction, valid where insp
    v = (phase - t_insp) / t_exp  # expiratory phase fraction, valid elsewhere

    peep = config.peep_cmh2o
    peak_p = config.peak_pressure_cmh2o
    flow = np.where(
        insp,
        config.peak_flow_lpm * np.exp(-DECAY_RATE * u),
        -config.peak_flow_lpm * config.i_to_e_ratio * np.exp(-DECAY_RATE * v),
    )
    pressure = np.where(
        insp,
        peep + (peak_p - peep) * u,
        peep + (peak_p - peep) * np.exp(-DECAY_RATE * v),
    )

    hold_mask = np.zeros(n, dtype=bool)
    for start, dur in config.holds:
        hold_mask |= (t >= start) & (t < start + dur)
    flow = np.where(hold_mask, 0.0, flow)
    pressure = np.where(hold_mask, config.plateau_cmh2o, pressure)

    flow = flow + config.noise_sd_flow * _standard_normals(config.rng_seed, 0, n)
    pressure = pressure + config.noise_sd_pressure * _standard_normals(config.rng_seed, 2 * n, n)

    flow_lps = flow / 60.0
    volume = np.empty(n, dtype=np.float64)
    volume[0] = 0.0
    if n > 1:
        steps = np.diff(t) * 0.5 * (flow_lps[1:] + flow_lps[:-1])
        np.cumsum(steps, out=volume[1:])

    w = Waveform(t=t, flow=flow, pressure=pressure, sample_rate_hz=rate, volume=volume)
    validate_waveform(w)
    truth = GroundTruth(
        hold_segments=tuple(sorted((s, s + d) for s, d in config.holds))
    )
    return w, truth
