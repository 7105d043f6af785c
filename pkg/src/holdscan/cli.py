"""Command-line front end: generate -> score -> detect -> report.

Each subcommand reads/writes the text formats defined by the library modules
(waveform CSV, score CSV, segment NDJSON), with machine-readable output on
stdout and diagnostics on stderr.  ``pipeline`` runs all four stages in
sequence through the same serialized text the separate commands would
exchange, so its output is byte-identical to piping them manually.

Exit codes: 0 success, 1 data/validation error, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import ast
import io
import json
import sys
from dataclasses import fields

from .detection import (
    DetectionConfig,
    detect_holds,
    read_segments_ndjson,
    segment_record,
    summarize_segment,
    write_segments_ndjson,
)
from .errors import HoldscanError, IndexOutOfBounds, InvalidConfig, MalformedRow
from .mechanics import (
    HEURISTICS_NOTE,
    MechanicsInput,
    estimate_compliance,
    estimate_resistance,
    last_positive_flow_before,
    peak_pressure_before,
    peep_estimate,
    tidal_volume_before,
)
from .mockgen import MockConfig, generate_mock_waveform
from .scoring import (
    ModelParams,
    load_score_trace_csv,
    score_series,
    write_score_trace_csv,
)
from .waveform import load_waveform_csv, waveform_to_csv

_MOCK_FIELD_NAMES = tuple(f.name for f in fields(MockConfig))


class _UsageError(Exception):
    """Command-line misuse that argparse cannot catch itself."""


# ---------------------------------------------------------------------------
# pipeline stages: text in, text out


def _stage_generate(cfg: MockConfig) -> tuple[str, str]:
    w, truth = generate_mock_waveform(cfg)
    gt_text = "".join(
        json.dumps({"start_s": s, "end_s": e}) + "\n" for s, e in truth.hold_segments
    )
    return waveform_to_csv(w), gt_text


def _stage_score(
    waveform_text: str,
    params: ModelParams,
    linear: bool = False,
    expected_rate_hz: float | None = None,
) -> str:
    w = load_waveform_csv(waveform_text, expected_rate_hz)
    trace = score_series(w, params)
    buf = io.StringIO()
    write_score_trace_csv(w.t, trace, buf, linear=linear)
    return buf.getvalue()


def _stage_detect(
    trace_text: str,
    waveform_text: str,
    config: DetectionConfig,
    expected_rate_hz: float | None = None,
) -> str:
    t, trace = load_score_trace_csv(trace_text, expected_rate_hz)
    w = load_waveform_csv(waveform_text, expected_rate_hz)
    if len(w) != len(trace):
        raise MalformedRow(
            f"trace has {len(trace)} rows but waveform has {len(w)} samples"
        )
    if abs(w.sample_rate_hz - trace.sample_rate_hz) > 1e-6 * w.sample_rate_hz:
        raise InvalidConfig(
            f"trace rate {trace.sample_rate_hz} Hz does not match waveform rate "
            f"{w.sample_rate_hz} Hz"
        )
    segments = detect_holds(trace, config)
    records = [segment_record(summarize_segment(w, seg)) for seg in segments]
    buf = io.StringIO()
    write_segments_ndjson(records, buf)
    return buf.getvalue()


def _report_record(w, rec: dict, peep_override: float | None) -> dict:
    start, end = rec["start_index"], rec["end_index"]
    if not (0 <= start < end <= len(w)):
        raise IndexOutOfBounds(
            f"segment [{start}, {end}) exceeds waveform length {len(w)}"
        )
    out = {
        "start_s": rec["start_s"],
        "end_s": rec["end_s"],
        "start_index": start,
        "end_index": end,
        "plateau_pressure_cmh2o": rec["mean_pressure"],
    }
    reasons: dict[str, str] = {}

    peak = peak_pressure_before(w, start)
    if peak is None:
        reasons["peak_pressure_cmh2o"] = "no samples before the hold"
    else:
        out["peak_pressure_cmh2o"] = peak

    peep = float(peep_override) if peep_override is not None else peep_estimate(w, start)
    out["peep_cmh2o"] = peep

    vt = tidal_volume_before(w, start)
    if vt is None:
        reasons["tidal_volume_l"] = "no volume rise in the lookback window"
    else:
        out["tidal_volume_l"] = vt

    flow = last_positive_flow_before(w, start)
    if flow is None:
        reasons["end_inspiratory_flow_lps"] = "no positive flow in the pre-hold window"
    else:
        out["end_inspiratory_flow_lps"] = flow

    if peak is None or vt is None or flow is None:
        missing = ", ".join(sorted(reasons))
        reasons["compliance_l_per_cmh2o"] = f"missing inputs: {missing}"
        reasons["resistance_cmh2o_per_lps"] = f"missing inputs: {missing}"
    else:
        mech_in = MechanicsInput(
            plateau_pressure=rec["mean_pressure"],
            peak_pressure=peak,
            peep=peep,
            tidal_volume=vt,
            end_inspiratory_flow=flow,
        )
        try:
            out["compliance_l_per_cmh2o"] = estimate_compliance(mech_in)
        except HoldscanError as exc:
            reasons["compliance_l_per_cmh2o"] = str(exc)
        try:
            out["resistance_cmh2o_per_lps"] = estimate_resistance(mech_in)
        except HoldscanError as exc:
            reasons["resistance_cmh2o_per_lps"] = str(exc)

    if reasons:
        out["unavailable"] = reasons
    out["note"] = HEURISTICS_NOTE
    return out


def _stage_report(
    waveform_text: str,
    segments_text: str,
    peep_override: float | None = None,
    expected_rate_hz: float | None = None,
) -> str:
    w = load_waveform_csv(waveform_text, expected_rate_hz)
    records = read_segments_ndjson(segments_text)
    return "".join(
        json.dumps(_report_record(w, rec, peep_override)) + "\n" for rec in records
    )


# ---------------------------------------------------------------------------
# argument plumbing


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    d = ModelParams()
    p.add_argument("--mu-flow", type=float, default=d.mu_flow,
                   help="hold-model mean flow in L/min (default %(default)s)")
    p.add_argument("--var-flow", type=float, default=d.var_flow,
                   help="hold-model flow variance in (L/min)^2 (default %(default)s)")
    p.add_argument("--mu-pressure", type=float, default=d.mu_pressure,
                   help="hold-model mean pressure in cmH2O (default %(default)s)")
    p.add_argument("--var-pressure", type=float, default=d.var_pressure,
                   help="hold-model pressure variance in (cmH2O)^2 (default %(default)s)")


def _model_from_ns(ns: argparse.Namespace) -> ModelParams:
    return ModelParams(
        mu_flow=ns.mu_flow,
        var_flow=ns.var_flow,
        mu_pressure=ns.mu_pressure,
        var_pressure=ns.var_pressure,
    )


def _add_detection_flags(p: argparse.ArgumentParser) -> None:
    d = DetectionConfig()
    p.add_argument("--log-threshold-on", type=float, default=d.log_threshold_on,
                   help="log-score opening a segment, nats (default %(default)s)")
    p.add_argument("--log-threshold-off", type=float, default=d.log_threshold_off,
                   help="log-score closing a segment, nats (default %(default)s)")
    p.add_argument("--min-duration-s", type=float, default=d.min_duration_s,
                   help="discard segments shorter than this, seconds (default %(default)s)")
    p.add_argument("--merge-gap-s", type=float, default=d.merge_gap_s,
                   help="merge segments separated by less than this, seconds (default %(default)s)")


def _detection_from_ns(ns: argparse.Namespace) -> DetectionConfig:
    return DetectionConfig(
        log_threshold_on=ns.log_threshold_on,
        log_threshold_off=ns.log_threshold_off,
        min_duration_s=ns.min_duration_s,
        merge_gap_s=ns.merge_gap_s,
    )


def _add_mock_flags(p: argparse.ArgumentParser) -> None:
    d = MockConfig()
    p.add_argument("--seed", type=int, default=None,
                   help="RNG seed, 64-bit integer; required here or as rng_seed in --config")
    p.add_argument("--config", default=None, metavar="PATH",
                   help="key = value file with MockConfig field names; flags override it")
    p.add_argument("--duration-s", type=float, default=None,
                   help=f"recording length in seconds (default {d.duration_s})")
    p.add_argument("--sample-rate-hz", type=float, default=None,
                   help=f"samples per second (default {d.sample_rate_hz})")
    p.add_argument("--respiratory-rate-bpm", type=float, default=None,
                   help=f"breaths per minute (default {d.respiratory_rate_bpm})")
    p.add_argument("--i-to-e-ratio", type=float, default=None,
                   help=f"inspiration:expiration ratio (default {d.i_to_e_ratio} = 1:2)")
    p.add_argument("--peak-flow-lpm", type=float, default=None,
                   help=f"peak inspiratory flow in L/min (default {d.peak_flow_lpm})")
    p.add_argument("--peep-cmh2o", type=float, default=None,
                   help=f"baseline pressure in cmH2O (default {d.peep_cmh2o})")
    p.add_argument("--plateau-cmh2o", type=float, default=None,
                   help=f"hold plateau pressure in cmH2O (default {d.plateau_cmh2o})")
    p.add_argument("--peak-pressure-cmh2o", type=float, default=None,
                   help=f"end-inspiratory pressure in cmH2O (default {d.peak_pressure_cmh2o})")
    p.add_argument("--noise-sd-flow", type=float, default=None,
                   help=f"flow noise SD in L/min (default {d.noise_sd_flow})")
    p.add_argument("--noise-sd-pressure", type=float, default=None,
                   help=f"pressure noise SD in cmH2O (default {d.noise_sd_pressure})")
    p.add_argument("--hold", action="append", default=None, metavar="START:DURATION",
                   help=f"hold interval in seconds, repeatable (default {d.holds[0][0]}:{d.holds[0][1]})")


def _parse_config_file(text: str) -> dict:
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InvalidConfig(f"config line {lineno}: expected key = value")
        key = key.strip()
        if key not in _MOCK_FIELD_NAMES:
            raise InvalidConfig(f"config line {lineno}: unknown key {key!r}")
        try:
            out[key] = ast.literal_eval(value.strip())
        except (ValueError, SyntaxError):
            raise InvalidConfig(
                f"config line {lineno}: cannot parse value {value.strip()!r}"
            ) from None
    return out


def _parse_hold_spec(spec: str) -> tuple[float, float]:
    parts = spec.split(":")
    if len(parts) != 2:
        raise InvalidConfig(f"hold spec {spec!r} must be START:DURATION")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise InvalidConfig(f"hold spec {spec!r} must be numeric") from None


def _mock_config_from(ns: argparse.Namespace) -> MockConfig:
    from_file: dict = {}
    if ns.config is not None:
        with open(ns.config, "r", encoding="utf-8") as fh:
            from_file = _parse_config_file(fh.read())

    kwargs: dict = {}
    for name in _MOCK_FIELD_NAMES:
        if name in ("holds", "rng_seed"):
            continue
        flag_value = getattr(ns, name)
        if flag_value is not None:
            kwargs[name] = flag_value
        elif name in from_file:
            kwargs[name] = from_file[name]

    if ns.hold is not None:
        kwargs["holds"] = tuple(_parse_hold_spec(s) for s in ns.hold)
    elif "holds" in from_file:
        kwargs["holds"] = from_file["holds"]

    if ns.seed is not None:
        kwargs["rng_seed"] = ns.seed
    elif "rng_seed" in from_file:
        kwargs["rng_seed"] = from_file["rng_seed"]
    else:
        raise _UsageError("a seed is required: pass --seed or rng_seed in --config")

    return MockConfig(**kwargs)


def _read_input(path: str, stdin) -> str:
    if path == "-":
        data = stdin.read()
        return data.decode("utf-8") if isinstance(data, bytes) else data
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write_output(path: str | None, text: str, stdout) -> None:
    if path is None or path == "-":
        stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_generate(ns, stdin, stdout, stderr) -> int:
    cfg = _mock_config_from(ns)
    wave_text, gt_text = _stage_generate(cfg)
    if ns.ground_truth is not None:
        _write_output(ns.ground_truth, gt_text, stdout)
    _write_output(ns.output, wave_text, stdout)
    return 0


def _cmd_score(ns, stdin, stdout, stderr) -> int:
    wave_text = _read_input(ns.waveform, stdin)
    out = _stage_score(wave_text, _model_from_ns(ns), ns.linear, ns.expected_rate_hz)
    _write_output(ns.output, out, stdout)
    return 0


def _cmd_detect(ns, stdin, stdout, stderr) -> int:
    if ns.waveform == "-":
        raise _UsageError("--waveform must be a file path, not '-'")
    trace_text = _read_input(ns.trace, stdin)
    wave_text = _read_input(ns.waveform, stdin)
    out = _stage_detect(trace_text, wave_text, _detection_from_ns(ns), ns.expected_rate_hz)
    _write_output(ns.output, out, stdout)
    return 0


def _cmd_report(ns, stdin, stdout, stderr) -> int:
    if ns.waveform == "-" and ns.segments == "-":
        raise _UsageError("at most one of waveform and --segments may read stdin")
    wave_text = _read_input(ns.waveform, stdin)
    seg_text = _read_input(ns.segments, stdin)
    out = _stage_report(wave_text, seg_text, ns.peep, ns.expected_rate_hz)
    _write_output(ns.output, out, stdout)
    return 0


def _cmd_pipeline(ns, stdin, stdout, stderr) -> int:
    cfg = _mock_config_from(ns)
    wave_text, gt_text = _stage_generate(cfg)
    trace_text = _stage_score(wave_text, _model_from_ns(ns))
    seg_text = _stage_detect(trace_text, wave_text, _detection_from_ns(ns))
    report_text = _stage_report(wave_text, seg_text, ns.peep)
    if ns.ground_truth is not None:
        _write_output(ns.ground_truth, gt_text, stdout)
    if ns.save_waveform is not None:
        _write_output(ns.save_waveform, wave_text, stdout)
    if ns.save_trace is not None:
        _write_output(ns.save_trace, trace_text, stdout)
    if ns.save_segments is not None:
        _write_output(ns.save_segments, seg_text, stdout)
    _write_output(ns.output, report_text, stdout)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="holdscan",
        description="Detect inspiratory holds in ventilator waveforms and "
        "estimate respiratory mechanics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="emit a seeded synthetic waveform CSV")
    _add_mock_flags(g)
    g.add_argument("--ground-truth", default=None, metavar="PATH",
                   help="also write true hold intervals as NDJSON to PATH")
    g.add_argument("-o", "--output", default=None, metavar="PATH",
                   help="waveform CSV destination (default stdout)")
    g.set_defaults(handler=_cmd_generate)

    s = sub.add_parser("score", help="score each sample of a waveform CSV")
    s.add_argument("waveform", help="waveform CSV path, or - for stdin")
    _add_model_flags(s)
    s.add_argument("--linear", action="store_true",
                   help="append a linear score column (exp of log_score, underflows to 0)")
    s.add_argument("--expected-rate-hz", type=float, default=None,
                   help="declared sample rate in Hz; inferred from spacing when omitted")
    s.add_argument("-o", "--output", default=None, metavar="PATH",
                   help="score CSV destination (default stdout)")
    s.set_defaults(handler=_cmd_score)

    dt = sub.add_parser("detect", help="segment holds from a score CSV")
    dt.add_argument("trace", help="score CSV path, or - for stdin")
    dt.add_argument("--waveform", required=True, metavar="PATH",
                    help="source waveform CSV (for per-segment channel means)")
    _add_detection_flags(dt)
    dt.add_argument("--expected-rate-hz", type=float, default=None,
                    help="declared sample rate in Hz; inferred from spacing when omitted")
    dt.add_argument("-o", "--output", default=None, metavar="PATH",
                    help="segment NDJSON destination (default stdout)")
    dt.set_defaults(handler=_cmd_detect)

    r = sub.add_parser("report", help="derive mechanics from detected segments")
    r.add_argument("waveform", help="waveform CSV path, or - for stdin")
    r.add_argument("--segments", required=True, metavar="PATH",
                   help="segment NDJSON path, or - for stdin")
    r.add_argument("--peep", type=float, default=None,
                   help="known PEEP in cmH2O; estimated from pre-hold pressure when omitted")
    r.add_argument("--expected-rate-hz", type=float, default=None,
                   help="declared sample rate in Hz; inferred from spacing when omitted")
    r.add_argument("-o", "--output", default=None, metavar="PATH",
                   help="report NDJSON destination (default stdout)")
    r.set_defaults(handler=_cmd_report)

    pl = sub.add_parser("pipeline", help="generate, score, detect, and report in one run")
    _add_mock_flags(pl)
    _add_model_flags(pl)
    _add_detection_flags(pl)
    pl.add_argument("--peep", type=float, default=None,
                    help="known PEEP in cmH2O; estimated from pre-hold pressure when omitted")
    pl.add_argument("--ground-truth", default=None, metavar="PATH",
                    help="also write true hold intervals as NDJSON to PATH")
    pl.add_argument("--save-waveform", default=None, metavar="PATH",
                    help="also write the intermediate waveform CSV to PATH")
    pl.add_argument("--save-trace", default=None, metavar="PATH",
                    help="also write the intermediate score CSV to PATH")
    pl.add_argument("--save-segments", default=None, metavar="PATH",
                    help="also write the intermediate segment NDJSON to PATH")
    pl.add_argument("-o", "--output", default=None, metavar="PATH",
                    help="report NDJSON destination (default stdout)")
    pl.set_defaults(handler=_cmd_pipeline)

    return parser


def run(argv=None, stdin=None, stdout=None, stderr=None) -> int:
    """Parse arguments and dispatch; returns the process exit code."""
    stdin = sys.stdin if stdin is None else stdin
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 2
        return 0 if code == 0 else 2
    try:
        return ns.handler(ns, stdin, stdout, stderr)
    except HoldscanError as exc:
        print(f"error: {exc}", file=stderr)
        return 1
    except (_UsageError, OSError) as exc:
        print(f"error: {exc}", file=stderr)
        return 2


def main() -> None:
    raise SystemExit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
