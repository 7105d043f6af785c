"""Ventilator waveform data model with CSV ingestion and validation.

A recording is a uniformly sampled time series of airflow (L/min) and airway
pressure (cmH2O), optionally with an inspired-volume channel (L).  Channels
are stored as read-only float64 arrays; :func:`validate_waveform` enforces the
invariants every downstream consumer relies on (strictly increasing
timestamps, uniform spacing, finite values).

CSV format: header line ``t,flow,pressure`` or ``t,flow,pressure,volume``,
comma-separated decimal values, UTF-8, LF or CRLF line endings, lines starting
with ``#`` ignored.  Values are written with 9 significant digits, which makes
write -> read -> write byte-stable.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .errors import (
    EmptyInput,
    InvalidConfig,
    MalformedRow,
    NonFiniteInput,
    NonMonotonicTime,
    NonUniformSampling,
)

# Relative tolerance on |dt - 1/rate|; tighter than any real monitor's jitter.
SPACING_RTOL = 1e-6

# Significant digits used when serializing values to CSV.
CSV_DIGITS = 9

_HEADER_BASE = ("t", "flow", "pressure")
_HEADER_VOLUME = ("t", "flow", "pressure", "volume")


@dataclass(frozen=True)
class Sample:
    """One time point of a recording."""

    t: float  # seconds
    flow: float  # L/min
    pressure: float  # cmH2O
    volume: float | None = None  # L, optional


@dataclass(frozen=True)
class Waveform:
    """Uniformly sampled recording; channels are parallel read-only arrays."""

    t: np.ndarray
    flow: np.ndarray
    pressure: np.ndarray
    sample_rate_hz: float
    volume: np.ndarray | None = None

    def __post_init__(self) -> None:
        for name in ("t", "flow", "pressure", "volume"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=np.float64)
            if arr.ndim != 1:
                raise MalformedRow(f"channel {name!r} must be 1-dimensional")
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def samples(self) -> tuple[Sample, ...]:
        """The recording as a tuple of per-point samples (built on demand)."""
        vol = self.volume
        return tuple(
            Sample(
                float(self.t[i]),
                float(self.flow[i]),
                float(self.pressure[i]),
                None if vol is None else float(vol[i]),
            )
            for i in range(len(self.t))
        )


def validate_waveform(w: Waveform) -> None:
    """Raise a taxonomy error unless all waveform invariants hold."""
    n = len(w.t)
    if n == 0:
        raise EmptyInput("waveform has no samples")
    for name in ("flow", "pressure"):
        if len(getattr(w, name)) != n:
            raise MalformedRow(f"channel {name!r} length differs from t")
    if w.volume is not None and len(w.volume) != n:
        raise MalformedRow("volume channel length differs from t")
    if not math.isfinite(w.sample_rate_hz) or w.sample_rate_hz <= 0:
        raise InvalidConfig(f"sample_rate_hz must be positive and finite, got {w.sample_rate_hz}")
    for name in ("t", "flow", "pressure", "volume"):
        arr = getattr(w, name)
        if arr is not None and not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise NonFiniteInput(f"channel {name!r} has a non-finite value at index {bad}")
    if n >= 2:
        dt = np.diff(w.t)
        if not np.all(dt > 0):
            bad = int(np.flatnonzero(dt <= 0)[0])
            raise NonMonotonicTime(
                f"timestamps not strictly increasing at index {bad + 1} "
                f"(t={w.t[bad]!r} then t={w.t[bad + 1]!r})"
            )
        nominal = 1.0 / w.sample_rate_hz
        dev = np.max(np.abs(dt - nominal))
        if dev > SPACING_RTOL * nominal:
            raise NonUniformSampling(
                f"timestamp spacing deviates from {nominal} s by {dev} "
                f"(allowed {SPACING_RTOL * nominal})"
            )


def check_time_grid(t: np.ndarray, expected_rate_hz: float | None = None) -> float:
    """Validate a timestamp grid (strictly increasing, uniform) and return its rate.

    The rate is ``expected_rate_hz`` when given.  Otherwise it is inferred
    from the total span, and snapped to the nearest integer when that lies
    within the uniformity tolerance: any rate in the tolerance band is equally
    consistent with the data, so the canonical representative undoes the tiny
    drift a serialized-and-reparsed grid picks up.  A single timestamp carries
    no spacing information and requires an explicit rate.
    """
    if expected_rate_hz is not None and (
        not math.isfinite(expected_rate_hz) or expected_rate_hz <= 0
    ):
        raise InvalidConfig(f"expected_rate_hz must be positive, got {expected_rate_hz}")
    if len(t) == 0:
        raise EmptyInput("no timestamps")
    if len(t) == 1:
        if expected_rate_hz is None:
            raise InvalidConfig("cannot infer sample rate from a single row; pass expected_rate_hz")
        return float(expected_rate_hz)
    dt = np.diff(t)
    if not np.all(dt > 0):
        bad = int(np.flatnonzero(dt <= 0)[0])
        raise NonMonotonicTime(f"timestamps not strictly increasing at row {bad + 2}")
    if expected_rate_hz is not None:
        rate = float(expected_rate_hz)
    else:
        rate = (len(t) - 1) / float(t[-1] - t[0])
        if round(rate) > 0 and abs(rate - round(rate)) <= SPACING_RTOL * rate:
            rate = float(round(rate))
    nominal = 1.0 / rate
    dev = float(np.max(np.abs(dt - nominal)))
    if dev > SPACING_RTOL * nominal:
        raise NonUniformSampling(
            f"timestamp spacing deviates from {nominal} s by {dev} "
            f"(allowed {SPACING_RTOL * nominal})"
        )
    return rate


def _decode_lines(source: IO | Iterable[str] | bytes | str) -> list[str]:
    if isinstance(source, bytes):
        return source.decode("utf-8").splitlines()
    if isinstance(source, str):
        return source.splitlines()
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return data.splitlines()
    return [line.rstrip("\r\n") for line in source]


def load_waveform_csv(source, expected_rate_hz: float | None = None) -> Waveform:
    """Parse and validate a waveform CSV.

    The sample rate is taken from ``expected_rate_hz`` when given, otherwise
    inferred from the median timestamp spacing (which needs at least two
    rows).  Raises the usual taxonomy errors on malformed or inconsistent
    input.
    """
    lines = _decode_lines(source)
    header: tuple[str, ...] | None = None
    rows: list[list[float]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if header is None:
            header = tuple(fields)
            if header not in (_HEADER_BASE, _HEADER_VOLUME):
                raise MalformedRow(f"line {lineno}: unrecognized header {line!r}")
            continue
        if len(fields) != len(header):
            raise MalformedRow(
                f"line {lineno}: expected {len(header)} fields, got {len(fields)}"
            )
        try:
            values = [float(f) for f in fields]
        except ValueError:
            raise MalformedRow(f"line {lineno}: non-numeric field in {line!r}") from None
        if not all(math.isfinite(v) for v in values):
            raise MalformedRow(f"line {lineno}: non-finite value in {line!r}")
        rows.append(values)
    if header is None or not rows:
        raise EmptyInput("no data rows found")

    cols = np.asarray(rows, dtype=np.float64).T
    rate = check_time_grid(cols[0], expected_rate_hz)
    w = Waveform(
        t=cols[0],
        flow=cols[1],
        pressure=cols[2],
        sample_rate_hz=rate,
        volume=cols[3] if len(header) == 4 else None,
    )
    validate_waveform(w)
    return w


def format_value(v: float) -> str:
    """Serialize one value with the package-wide CSV precision."""
    return format(float(v), f".{CSV_DIGITS}g")


def write_waveform_csv(w: Waveform, stream: IO[str]) -> None:
    """Write the waveform in the canonical CSV format (LF line endings)."""
    with_volume = w.volume is not None
    stream.write(",".join(_HEADER_VOLUME if with_volume else _HEADER_BASE) + "\n")
    for i in range(len(w)):
        fields = [format_value(w.t[i]), format_value(w.flow[i]), format_value(w.pressure[i])]
        if with_volume:
            fields.append(format_value(w.volume[i]))
        stream.write(",".join(fields) + "\n")


def waveform_to_csv(w: Waveform) -> str:
    buf = io.StringIO()
    write_waveform_csv(w, buf)
    return buf.getvalue()
