"""Inspiratory-hold detection and respiratory mechanics for ventilator waveforms.

Typical use:

    from holdscan import MockConfig, generate_mock_waveform, score_series, detect_holds

    w, truth = generate_mock_waveform(MockConfig(rng_seed=7))
    trace = score_series(w)
    segments = detect_holds(trace)
"""

from .detection import (
    DetectionConfig,
    HoldSegment,
    HoldSummary,
    detect_holds,
    read_segments_ndjson,
    segment_record,
    summarize_segment,
    write_segments_ndjson,
)
from .errors import (
    DegenerateDrivingPressure,
    DegenerateFlow,
    EmptyInput,
    HoldscanError,
    IndexOutOfBounds,
    InvalidConfig,
    InvalidRange,
    MalformedRow,
    NonFiniteInput,
    NonMonotonicTime,
    NonPositiveVariance,
    NonUniformSampling,
)
from .mechanics import (
    MechanicsEstimate,
    MechanicsInput,
    estimate_compliance,
    estimate_resistance,
    integrate_volume,
)
from .mockgen import GroundTruth, MockConfig, generate_mock_waveform
from .scoring import (
    ModelParams,
    ScoreTrace,
    gaussian_pdf,
    load_score_trace_csv,
    log_gaussian_pdf,
    log_score_sample,
    score_sample,
    score_series,
    window_log_evidence,
    write_score_trace_csv,
)
from .waveform import (
    Sample,
    Waveform,
    load_waveform_csv,
    validate_waveform,
    waveform_to_csv,
    write_waveform_csv,
)

__version__ = "0.1.0"

__all__ = [
    "DetectionConfig",
    "HoldSegment",
    "HoldSummary",
    "detect_holds",
    "read_segments_ndjson",
    "segment_record",
    "summarize_segment",
    "write_segments_ndjson",
    "DegenerateDrivingPressure",
    "DegenerateFlow",
    "EmptyInput",
    "HoldscanError",
    "IndexOutOfBounds",
    "InvalidConfig",
    "InvalidRange",
    "MalformedRow",
    "NonFiniteInput",
    "NonMonotonicTime",
    "NonPositiveVariance",
    "NonUniformSampling",
    "MechanicsEstimate",
    "MechanicsInput",
    "estimate_compliance",
    "estimate_resistance",
    "integrate_volume",
    "GroundTruth",
    "MockConfig",
    "generate_mock_waveform",
    "ModelParams",
    "ScoreTrace",
    "gaussian_pdf",
    "load_score_trace_csv",
    "log_gaussian_pdf",
    "log_score_sample",
    "score_sample",
    "score_series",
    "window_log_evidence",
    "write_score_trace_csv",
    "Sample",
    "Waveform",
    "load_waveform_csv",
    "validate_waveform",
    "waveform_to_csv",
    "write_waveform_csv",
    "__version__",
]
