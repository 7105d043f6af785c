"""Hold segmentation by hysteresis thresholding of a score trace.

A segment opens when the log-score reaches the on-threshold and closes at the
first sample strictly below the off-threshold (the closing sample is not part
of the segment).  Two thresholds suppress chatter around a single level;
nearby segments separated by sub-gap dropouts are merged, and anything
shorter than the minimum duration is discarded.

Default thresholds: at the hold operating point the log-score is about -1.66
and a 3-sigma noise excursion on both channels costs about 9 nats, so -10.0
admits realistic hold samples while breathing samples sit hundreds of nats
lower; -14.0 on the way out adds hysteresis.  All four knobs are
configuration, not constants.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO, Iterable, Mapping

import numpy as np

from .errors import IndexOutOfBounds, InvalidConfig, MalformedRow
from .scoring import ScoreTrace
from .waveform import Waveform, _decode_lines, validate_waveform

# Keys of one exported segment record, in canonical output order.
SEGMENT_RECORD_KEYS = (
    "start_s",
    "end_s",
    "start_index",
    "end_index",
    "peak_log_score",
    "mean_log_score",
    "mean_pressure",
    "mean_flow",
)


@dataclass(frozen=True)
class DetectionConfig:
    log_threshold_on: float = -10.0
    log_threshold_off: float = -14.0
    min_duration_s: float = 0.3
    merge_gap_s: float = 0.1

    def __post_init__(self) -> None:
        if math.isnan(self.log_threshold_on) or math.isnan(self.log_threshold_off):
            raise InvalidConfig("thresholds must not be NaN")
        if self.log_threshold_off > self.log_threshold_on:
            raise InvalidConfig(
                f"log_threshold_off ({self.log_threshold_off}) must not exceed "
                f"log_threshold_on ({self.log_threshold_on})"
            )
        if not math.isfinite(self.min_duration_s) or self.min_duration_s < 0:
            raise InvalidConfig(f"min_duration_s must be >= 0, got {self.min_duration_s}")
        if not math.isfinite(self.merge_gap_s) or self.merge_gap_s < 0:
            raise InvalidConfig(f"merge_gap_s must be >= 0, got {self.merge_gap_s}")


@dataclass(frozen=True)
class HoldSegment:
    """A detected hold: [start_index, end_index) samples, times trace-relative."""

    start_index: int
    end_index: int  # exclusive
    start_s: float
    end_s: float
    peak_log_score: float
    mean_log_score: float

    def __post_init__(self) -> None:
        if self.start_index < 0 or self.start_index >= self.end_index:
            raise InvalidConfig(
                f"segment indices must satisfy 0 <= start < end, "
                f"got [{self.start_index}, {self.end_index})"
            )
        if self.peak_log_score < self.mean_log_score:
            raise InvalidConfig("peak_log_score must be >= mean_log_score")


@dataclass(frozen=True)
class HoldSummary:
    """Channel means over exactly the segment's samples."""

    segment: HoldSegment
    mean_pressure: float  # cmH2O; plateau pressure estimate
    mean_flow: float  # L/min
    mean_abs_flow: float  # L/min


def detect_holds(trace: ScoreTrace, config: DetectionConfig = DetectionConfig()) -> list[HoldSegment]:
    """Run the hysteresis state machine over one trace.

    Returns segments sorted by start index, pairwise disjoint, each at least
    min_duration_s long.  An above-threshold run still open at the end of the
    trace closes there.
    """
    ls = trace.log_scores
    rate = trace.sample_rate_hz
    on = config.log_threshold_on
    off = config.log_threshold_off

    raw: list[tuple[int, int]] = []
    open_at: int | None = None
    for i, s in enumerate(ls):
        if open_at is None:
            if s >= on:
                open_at = i
        elif s < off:
            raw.append((open_at, i))
            open_at = None
    if open_at is not None:
        raw.append((open_at, len(ls)))

    merged: list[tuple[int, int]] = []
    for seg in raw:
        if merged and (seg[0] - merged[-1][1]) / rate < config.merge_gap_s:
            merged[-1] = (merged[-1][0], seg[1])
        else:
            merged.append(seg)

    out: list[HoldSegment] = []
    for a, b in merged:
        if (b - a) / rate < config.min_duration_s:
            continue
        window = ls[a:b]
        out.append(
            HoldSegment(
                start_index=a,
                end_index=b,
                start_s=a / rate,
                end_s=b / rate,
                peak_log_score=float(np.max(window)),
                mean_log_score=float(np.mean(window)),
            )
        )
    return out


def summarize_segment(w: Waveform, seg: HoldSegment) -> HoldSummary:
    """Channel means over the segment; the waveform must be the trace's source."""
    validate_waveform(w)
    if seg.end_index > len(w):
        raise IndexOutOfBounds(
            f"segment [{seg.start_index}, {seg.end_index}) exceeds waveform length {len(w)}"
        )
    flow = w.flow[seg.start_index : seg.end_index]
    pressure = w.pressure[seg.start_index : seg.end_index]
    return HoldSummary(
        segment=seg,
        mean_pressure=float(np.mean(pressure)),
        mean_flow=float(np.mean(flow)),
        mean_abs_flow=float(np.mean(np.abs(flow))),
    )


def segment_record(summary: HoldSummary) -> dict:
    """Flatten one summary into the canonical export record."""
    seg = summary.segment
    return {
        "start_s": seg.start_s,
        "end_s": seg.end_s,
        "start_index": seg.start_index,
        "end_index": seg.end_index,
        "peak_log_score": seg.peak_log_score,
        "mean_log_score": seg.mean_log_score,
        "mean_pressure": summary.mean_pressure,
        "mean_flow": summary.mean_flow,
    }


def write_segments_ndjson(records: Iterable[Mapping], stream: IO[str]) -> None:
    """One JSON object per line, keys in canonical order."""
    for rec in records:
        ordered = {k: rec[k] for k in SEGMENT_RECORD_KEYS}
        stream.write(json.dumps(ordered) + "\n")


def read_segments_ndjson(source) -> list[dict]:
    """Parse segment records, validating keys and types; returns plain dicts."""
    records: list[dict] = []
    for lineno, raw in enumerate(_decode_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRow(f"line {lineno}: invalid JSON: {exc}") from None
        if not isinstance(obj, dict) or set(obj) != set(SEGMENT_RECORD_KEYS):
            raise MalformedRow(
                f"line {lineno}: expected exactly keys {SEGMENT_RECORD_KEYS}"
            )
        for key in ("start_index", "end_index"):
            if not isinstance(obj[key], int):
                raise MalformedRow(f"line {lineno}: {key} must be an integer")
        for key in SEGMENT_RECORD_KEYS:
            if key.endswith("_index"):
                continue
            if not isinstance(obj[key], (int, float)) or isinstance(obj[key], bool):
                raise MalformedRow(f"line {lineno}: {key} must be a number")
        records.append({k: obj[k] for k in SEGMENT_RECORD_KEYS})
    return records
