import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_waveform
from holdscan import (
    DetectionConfig,
    HoldSegment,
    IndexOutOfBounds,
    InvalidConfig,
    MalformedRow,
    ScoreTrace,
    detect_holds,
    read_segments_ndjson,
    segment_record,
    summarize_segment,
    write_segments_ndjson,
)
from holdscan.detection import SEGMENT_RECORD_KEYS

RATE = 100.0


def trace_of(values, rate=RATE):
    return ScoreTrace(log_scores=np.asarray(values, dtype=np.float64), sample_rate_hz=rate)


def flat_trace(n, level=-50.0, runs=(), run_level=-2.0, rate=RATE):
    """Constant trace with [start, stop) index runs raised to run_level."""
    scores = np.full(n, level)
    for a, b in runs:
        scores[a:b] = run_level
    return trace_of(scores, rate)


class TestConfig:
    def test_defaults(self):
        cfg = DetectionConfig()
        assert cfg.log_threshold_on == -10.0
        assert cfg.log_threshold_off == -14.0
        assert cfg.min_duration_s == 0.3
        assert cfg.merge_gap_s == 0.1

    def test_off_above_on_rejected(self):
        with pytest.raises(InvalidConfig):
            DetectionConfig(log_threshold_on=-10.0, log_threshold_off=-9.0)

    def test_equal_thresholds_allowed(self):
        DetectionConfig(log_threshold_on=-10.0, log_threshold_off=-10.0)

    def test_nan_threshold_rejected(self):
        with pytest.raises(InvalidConfig):
            DetectionConfig(log_threshold_on=float("nan"))

    def test_negative_durations_rejected(self):
        with pytest.raises(InvalidConfig):
            DetectionConfig(min_duration_s=-0.1)
        with pytest.raises(InvalidConfig):
            DetectionConfig(merge_gap_s=float("inf"))


class TestDetectHolds:
    def test_all_quiet(self):
        assert detect_holds(flat_trace(9000)) == []

    def test_single_run(self):
        segs = detect_holds(flat_trace(9000, runs=[(4500, 4700)]))
        assert len(segs) == 1
        seg = segs[0]
        assert (seg.start_index, seg.end_index) == (4500, 4700)
        assert seg.start_s == 45.0
        assert seg.end_s == 47.0
        assert seg.peak_log_score == -2.0
        assert seg.mean_log_score == -2.0

    def test_run_shorter_than_min_duration_dropped(self):
        # 10 samples at 100 Hz is 0.1 s, below the 0.3 s floor
        assert detect_holds(flat_trace(1000, runs=[(400, 410)])) == []

    def test_hysteresis_band_keeps_segment_open(self):
        # dips to -12 sit between off (-14) and on (-10) and must not close
        scores = np.full(200, -50.0)
        scores[50:120] = -2.0
        scores[80:90] = -12.0
        segs = detect_holds(trace_of(scores))
        assert len(segs) == 1
        assert (segs[0].start_index, segs[0].end_index) == (50, 120)

    def test_below_off_closes_and_is_excluded(self):
        scores = np.full(200, -50.0)
        scores[50:120] = -2.0
        scores[90] = -20.0  # below off: closes the segment, sample excluded
        segs = detect_holds(trace_of(scores), DetectionConfig(merge_gap_s=0.0))
        assert [(s.start_index, s.end_index) for s in segs] == [(50, 90)]

    def test_open_at_trace_end(self):
        scores = np.full(100, -50.0)
        scores[60:] = -2.0
        segs = detect_holds(trace_of(scores))
        assert [(s.start_index, s.end_index) for s in segs] == [(60, 100)]
        assert segs[0].end_s == 1.0

    def test_short_gap_merges(self):
        # 5-sample gap is 0.05 s < merge_gap_s = 0.1
        segs = detect_holds(flat_trace(1000, runs=[(100, 200), (205, 300)]))
        assert [(s.start_index, s.end_index) for s in segs] == [(100, 300)]

    def test_long_gap_stays_split(self):
        # 20-sample gap is 0.2 s > 0.1
        segs = detect_holds(flat_trace(1000, runs=[(100, 200), (220, 320)]))
        assert [(s.start_index, s.end_index) for s in segs] == [(100, 200), (220, 320)]

    def test_merged_stats_span_the_gap(self):
        segs = detect_holds(flat_trace(1000, runs=[(100, 200), (205, 300)]))
        seg = segs[0]
        assert seg.peak_log_score == -2.0
        # mean covers the -50 gap samples too
        expected = (195 * -2.0 + 5 * -50.0) / 200
        assert seg.mean_log_score == pytest.approx(expected, rel=1e-12)

    def test_two_short_runs_merge_then_survive(self):
        # each run is 0.2 s, below min duration alone; merged with the gap
        # they span 0.45 s and survive
        segs = detect_holds(flat_trace(1000, runs=[(100, 120), (125, 145)]))
        assert [(s.start_index, s.end_index) for s in segs] == [(100, 145)]

    def test_minus_inf_scores_never_open(self):
        scores = np.full(100, -np.inf)
        assert detect_holds(trace_of(scores)) == []

    def test_empty_trace(self):
        assert detect_holds(trace_of([])) == []

    @settings(max_examples=60, deadline=None)
    @given(
        seed=st.integers(0, 2**32 - 1),
        on=st.floats(-12, -6),
        gap=st.floats(0.5, 8),
    )
    def test_segments_sorted_disjoint_and_long_enough(self, seed, on, gap):
        rng = np.random.default_rng(seed)
        scores = rng.uniform(-30, 5, 600)
        cfg = DetectionConfig(log_threshold_on=on, log_threshold_off=on - gap)
        segs = detect_holds(trace_of(scores), cfg)
        for seg in segs:
            assert seg.end_index - seg.start_index >= cfg.min_duration_s * RATE
            assert seg.start_s == seg.start_index / RATE
            assert seg.end_s == seg.end_index / RATE
        for prev, nxt in zip(segs, segs[1:]):
            assert prev.end_index < nxt.start_index

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), delta=st.floats(0.5, 6))
    def test_raising_thresholds_shrinks_segments(self, seed, delta):
        rng = np.random.default_rng(seed)
        scores = rng.uniform(-30, 5, 600)
        low = DetectionConfig(log_threshold_on=-10.0, log_threshold_off=-14.0)
        high = DetectionConfig(log_threshold_on=-10.0 + delta, log_threshold_off=-14.0 + delta)
        low_segs = detect_holds(trace_of(scores), low)
        for seg in detect_holds(trace_of(scores), high):
            assert any(
                c.start_index <= seg.start_index and seg.end_index <= c.end_index
                for c in low_segs
            )

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), shift=st.floats(-8, 8))
    def test_shift_equivariance(self, seed, shift):
        # scores drawn away from threshold ulp-neighbourhoods so that
        # (x + c >= on + c) cannot flip under rounding
        rng = np.random.default_rng(seed)
        scores = rng.uniform(-30, 5, 600)
        cfg = DetectionConfig()
        on, off = cfg.log_threshold_on + shift, cfg.log_threshold_off + shift
        if any(
            min(abs(s + shift - on), abs(s + shift - off)) < 1e-6 for s in scores
        ):
            return
        base = detect_holds(trace_of(scores), cfg)
        moved = detect_holds(
            trace_of(scores + shift),
            DetectionConfig(log_threshold_on=on, log_threshold_off=off),
        )
        assert [(s.start_index, s.end_index) for s in moved] == [
            (s.start_index, s.end_index) for s in base
        ]

    def test_deterministic(self):
        rng = np.random.default_rng(99)
        scores = rng.uniform(-30, 5, 600)
        a = detect_holds(trace_of(scores))
        b = detect_holds(trace_of(scores.copy()))
        assert a == b


class TestSegmentValidation:
    def test_end_not_after_start_rejected(self):
        with pytest.raises(InvalidConfig):
            HoldSegment(
                start_index=10,
                end_index=10,
                start_s=0.1,
                end_s=0.1,
                peak_log_score=-2.0,
                mean_log_score=-2.0,
            )

    def test_peak_below_mean_rejected(self):
        with pytest.raises(InvalidConfig):
            HoldSegment(
                start_index=0,
                end_index=10,
                start_s=0.0,
                end_s=0.1,
                peak_log_score=-5.0,
                mean_log_score=-2.0,
            )


class TestSummarize:
    def test_means(self):
        w = make_waveform([-1.0, 1.0, 3.0], [14.0, 15.0, 16.0])
        seg = detect_holds(trace_of([-2.0, -2.0, -2.0]), DetectionConfig(min_duration_s=0.0))[0]
        summary = summarize_segment(w, seg)
        assert summary.mean_pressure == pytest.approx(15.0, abs=1e-12)
        assert summary.mean_flow == pytest.approx(1.0, abs=1e-12)
        assert summary.mean_abs_flow == pytest.approx(5.0 / 3.0, rel=1e-12)

    def test_signed_flow_cancels(self):
        w = make_waveform([-1.0, 1.0], [15.0, 15.0])
        seg = detect_holds(trace_of([-2.0, -2.0]), DetectionConfig(min_duration_s=0.0))[0]
        summary = summarize_segment(w, seg)
        assert summary.mean_flow == pytest.approx(0.0, abs=1e-12)
        assert summary.mean_abs_flow == pytest.approx(1.0, abs=1e-12)

    def test_out_of_bounds(self):
        w = make_waveform([0.0, 0.0], [15.0, 15.0])
        seg = HoldSegment(
            start_index=0,
            end_index=5,
            start_s=0.0,
            end_s=0.05,
            peak_log_score=-2.0,
            mean_log_score=-2.0,
        )
        with pytest.raises(IndexOutOfBounds):
            summarize_segment(w, seg)


class TestNdjson:
    def make_summaries(self):
        w = make_waveform(
            np.concatenate([np.full(50, 30.0), np.full(60, 0.5), np.full(90, -20.0)]),
            np.concatenate([np.full(50, 18.0), np.full(60, 15.1), np.full(90, 8.0)]),
        )
        scores = np.full(200, -50.0)
        scores[50:110] = -2.5
        segs = detect_holds(trace_of(scores))
        return w, [summarize_segment(w, s) for s in segs]

    def test_record_key_order(self):
        _, summaries = self.make_summaries()
        rec = segment_record(summaries[0])
        assert tuple(rec.keys()) == SEGMENT_RECORD_KEYS

    def test_round_trip(self):
        _, summaries = self.make_summaries()
        buf = io.StringIO()
        write_segments_ndjson([segment_record(s) for s in summaries], buf)
        text = buf.getvalue()
        assert text.endswith("\n")
        records = read_segments_ndjson(text)
        assert records == [segment_record(s) for s in summaries]
        buf2 = io.StringIO()
        write_segments_ndjson(records, buf2)
        assert buf2.getvalue() == text

    def test_each_line_is_plain_json(self):
        _, summaries = self.make_summaries()
        buf = io.StringIO()
        write_segments_ndjson([segment_record(s) for s in summaries], buf)
        for line in buf.getvalue().splitlines():
            rec = json.loads(line)
            assert set(rec) == set(SEGMENT_RECORD_KEYS)

    def test_minus_infinity_round_trips(self):
        rec = {
            "start_s": 0.0,
            "end_s": 0.5,
            "start_index": 0,
            "end_index": 50,
            "peak_log_score": -1.0,
            "mean_log_score": float("-inf"),
            "mean_pressure": 15.0,
            "mean_flow": 0.0,
        }
        line = json.dumps(rec)
        assert "-Infinity" in line
        got = read_segments_ndjson(line + "\n")
        assert got[0]["mean_log_score"] == float("-inf")

    def test_empty_input(self):
        assert read_segments_ndjson("") == []
        assert read_segments_ndjson("\n\n") == []

    def test_bad_json_rejected(self):
        with pytest.raises(MalformedRow):
            read_segments_ndjson("{not json}\n")

    def test_missing_key_rejected(self):
        rec = {k: 1.0 for k in SEGMENT_RECORD_KEYS[:-1]}
        with pytest.raises(MalformedRow):
            read_segments_ndjson(json.dumps(rec) + "\n")

    def test_non_integer_index_rejected(self):
        rec = {k: 1.0 for k in SEGMENT_RECORD_KEYS}
        rec["start_index"] = 1.5
        with pytest.raises(MalformedRow):
            read_segments_ndjson(json.dumps(rec) + "\n")

    def test_key_order_normalized_on_read(self):
        rec = {
            "mean_flow": 0.0,
            "mean_pressure": 15.0,
            "mean_log_score": -2.0,
            "peak_log_score": -1.0,
            "end_index": 50,
            "start_index": 0,
            "end_s": 0.5,
            "start_s": 0.0,
        }
        got = read_segments_ndjson(json.dumps(rec) + "\n")
        assert tuple(got[0].keys()) == SEGMENT_RECORD_KEYS

