"""Per-sample hold scoring from Gaussian channel likelihoods.

The hold model says flow and pressure are independent white Gaussian noise
around a zero-flow / plateau-pressure operating point.  With per-sample
density product

    q = N(flow | mu_f, var_f) * N(pressure | mu_p, var_p)

the score is the evidence ratio f = q / (1 - q): large when a sample looks
like a hold, vanishing when it looks like anything else.  Scores at ordinary
breathing samples underflow linear float64 (a 60 L/min flow excursion costs
1800 nats), so the log-domain path is the canonical representation and the
linear score is a derived view.

q is clamped to at most 1 - 1e-12 before forming q / (1 - q): the ratio is
only self-consistent as a probability when sigma_f * sigma_p >= 1/(2*pi), and
the clamp keeps the function total for user-supplied small variances.

Prior model weights cancel out of the ratio up to a constant factor, which is
why no prior inputs appear anywhere in this module; shifting all log-scores
and detection thresholds by the same constant leaves detections unchanged
(see the detection module's tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO

import numpy as np

from .errors import (
    EmptyInput,
    InvalidConfig,
    InvalidRange,
    MalformedRow,
    NonFiniteInput,
    NonPositiveVariance,
)
from .waveform import Waveform, check_time_grid, format_value, validate_waveform, _decode_lines

# ln of the density-product ceiling 1 - 1e-12.
LOG_Q_MAX = math.log1p(-1e-12)

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ModelParams:
    """Gaussian operating point of the hold model, one channel each."""

    mu_flow: float = 0.0  # L/min
    var_flow: float = 1.0  # (L/min)^2
    mu_pressure: float = 15.0  # cmH2O
    var_pressure: float = 1.0  # (cmH2O)^2

    def __post_init__(self) -> None:
        for name in ("mu_flow", "var_flow", "mu_pressure", "var_pressure"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise NonFiniteInput(f"{name} must be finite, got {v}")
        if self.var_flow <= 0:
            raise NonPositiveVariance(f"var_flow must be > 0, got {self.var_flow}")
        if self.var_pressure <= 0:
            raise NonPositiveVariance(f"var_pressure must be > 0, got {self.var_pressure}")


@dataclass(frozen=True)
class ScoreTrace:
    """ln f per waveform sample; entries are finite or -inf (score underflow)."""

    log_scores: np.ndarray
    sample_rate_hz: float

    def __post_init__(self) -> None:
        arr = np.asarray(self.log_scores, dtype=np.float64)
        if arr.ndim != 1:
            raise MalformedRow("log_scores must be 1-dimensional")
        if np.any(np.isnan(arr)) or np.any(arr == np.inf):
            raise NonFiniteInput("log_scores entries must be finite or -inf")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "log_scores", arr)
        if not math.isfinite(self.sample_rate_hz) or self.sample_rate_hz <= 0:
            raise InvalidConfig(
                f"sample_rate_hz must be positive and finite, got {self.sample_rate_hz}"
            )

    def __len__(self) -> int:
        return len(self.log_scores)


def _check_finite(**named: float) -> None:
    for name, v in named.items():
        if not math.isfinite(v):
            raise NonFiniteInput(f"{name} must be finite, got {v}")


def _check_variance(variance: float) -> None:
    if not math.isfinite(variance) or variance <= 0:
        raise NonPositiveVariance(f"variance must be > 0 and finite, got {variance}")


def gaussian_pdf(x: float, mean: float, variance: float) -> float:
    """Normal density; may underflow to exactly 0 for extreme x."""
    _check_variance(variance)
    _check_finite(x=x, mean=mean)
    d = x - mean
    # d * d instead of d ** 2: float multiply overflows quietly to inf,
    # which exp() maps to 0, while ** raises OverflowError.
    return math.exp(-(d * d) / (2.0 * variance)) / math.sqrt(_TWO_PI * variance)


def log_gaussian_pdf(x: float, mean: float, variance: float) -> float:
    """Log of gaussian_pdf; never underflows for finite inputs."""
    _check_variance(variance)
    _check_finite(x=x, mean=mean)
    d = x - mean
    return -0.5 * math.log(_TWO_PI * variance) - (d * d) / (2.0 * variance)


def score_sample(flow: float, pressure: float, params: ModelParams = ModelParams()) -> float:
    """Evidence ratio q/(1-q) for one sample, q clamped to 1 - 1e-12."""
    q = gaussian_pdf(flow, params.mu_flow, params.var_flow) * gaussian_pdf(
        pressure, params.mu_pressure, params.var_pressure
    )
    q = min(q, 1.0 - 1e-12)
    return q / (1.0 - q)


def log_score_sample(flow: float, pressure: float, params: ModelParams = ModelParams()) -> float:
    """ln of score_sample, computed without leaving the log domain.

    Uses ln f = ln q - log1p(-q), so that for ln q < -40 the result equals
    ln q to full precision instead of underflowing.  Returns -inf only when
    the squared deviation itself overflows float64.
    """
    lq = log_gaussian_pdf(flow, params.mu_flow, params.var_flow) + log_gaussian_pdf(
        pressure, params.mu_pressure, params.var_pressure
    )
    lq = min(lq, LOG_Q_MAX)
    return lq - math.log1p(-math.exp(lq))


def _log_scores_array(flow: np.ndarray, pressure: np.ndarray, params: ModelParams) -> np.ndarray:
    df = flow - params.mu_flow
    dp = pressure - params.mu_pressure
    lq = (
        -0.5 * math.log(_TWO_PI * params.var_flow)
        - df * df / (2.0 * params.var_flow)
        - 0.5 * math.log(_TWO_PI * params.var_pressure)
        - dp * dp / (2.0 * params.var_pressure)
    )
    np.minimum(lq, LOG_Q_MAX, out=lq)
    with np.errstate(under="ignore"):
        q = np.exp(lq)
    return lq - np.log1p(-q)


def score_series(w: Waveform, params: ModelParams = ModelParams()) -> ScoreTrace:
    """Score every sample of a validated waveform; length is preserved."""
    validate_waveform(w)
    return ScoreTrace(
        log_scores=_log_scores_array(w.flow, w.pressure, params),
        sample_rate_hz=w.sample_rate_hz,
    )


def window_log_evidence(
    w: Waveform, start_index: int, end_index_exclusive: int, params: ModelParams = ModelParams()
) -> float:
    """Summed log density of both channels over [start, end).

    Exactly-rounded summation (math.fsum) keeps the value additive across
    window splits to within one final rounding.
    """
    validate_waveform(w)
    n = len(w)
    if not (0 <= start_index < end_index_exclusive <= n):
        raise InvalidRange(
            f"window [{start_index}, {end_index_exclusive}) out of bounds for {n} samples"
        )
    df = w.flow[start_index:end_index_exclusive] - params.mu_flow
    dp = w.pressure[start_index:end_index_exclusive] - params.mu_pressure
    per_sample = (
        -0.5 * math.log(_TWO_PI * params.var_flow)
        - df * df / (2.0 * params.var_flow)
        - 0.5 * math.log(_TWO_PI * params.var_pressure)
        - dp * dp / (2.0 * params.var_pressure)
    )
    return math.fsum(per_sample)


def write_score_trace_csv(t: np.ndarray, trace: ScoreTrace, stream: IO[str], linear: bool = False) -> None:
    """Write ``t,log_score`` rows (plus a linear ``score`` column on request).

    The linear column applies exp() with underflow-to-zero semantics, so it is
    plot-ready but lossy; the log column is the canonical record.
    """
    if len(t) != len(trace):
        raise MalformedRow("t and trace lengths differ")
    stream.write("t,log_score,score\n" if linear else "t,log_score\n")
    ls = trace.log_scores
    if linear:
        with np.errstate(under="ignore", over="ignore"):
            lin = np.exp(ls)
        for i in range(len(ls)):
            stream.write(
                f"{format_value(t[i])},{format_value(ls[i])},{format_value(lin[i])}\n"
            )
    else:
        for i in range(len(ls)):
            stream.write(f"{format_value(t[i])},{format_value(ls[i])}\n")


def load_score_trace_csv(source, expected_rate_hz: float | None = None) -> tuple[np.ndarray, ScoreTrace]:
    """Parse a score CSV back into (t, ScoreTrace).

    Accepts the two- or three-column layout emitted by write_score_trace_csv;
    only ``t`` and ``log_score`` are read.  Timestamps must be strictly
    increasing and uniformly spaced, matching the waveform rules.
    """
    lines = _decode_lines(source)
    header: tuple[str, ...] | None = None
    t_vals: list[float] = []
    ls_vals: list[float] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if header is None:
            header = tuple(fields)
            if header[:2] != ("t", "log_score") or len(header) > 3:
                raise MalformedRow(f"line {lineno}: unrecognized header {line!r}")
            if len(header) == 3 and header[2] != "score":
                raise MalformedRow(f"line {lineno}: unrecognized header {line!r}")
            continue
        if len(fields) != len(header):
            raise MalformedRow(
                f"line {lineno}: expected {len(header)} fields, got {len(fields)}"
            )
        try:
            tv = float(fields[0])
            lsv = float(fields[1])
        except ValueError:
            raise MalformedRow(f"line {lineno}: non-numeric field in {line!r}") from None
        if not math.isfinite(tv):
            raise MalformedRow(f"line {lineno}: non-finite timestamp in {line!r}")
        if math.isnan(lsv) or lsv == math.inf:
            raise MalformedRow(f"line {lineno}: log_score must be finite or -inf in {line!r}")
        t_vals.append(tv)
        ls_vals.append(lsv)
    if header is None or not t_vals:
        raise EmptyInput("no data rows found")

    t = np.asarray(t_vals, dtype=np.float64)
    rate = check_time_grid(t, expected_rate_hz)
    return t, ScoreTrace(log_scores=np.asarray(ls_vals, dtype=np.float64), sample_rate_hz=rate)
