"""Command-line entry point: ``teamcomm <command> ...``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from teamcomm import __version__, kernels
from teamcomm.analysis import (
    STAT_COLUMNS,
    AnalysisConfig,
    ReportError,
    analyze,
    compare_moi,
    compare_survey,
    compare_teams,
    frequency_table,
    parse_survey,
    session_windows,
)
from teamcomm.ingest import IngestConfig, IngestError, PausePolicy, SyncError, atomic_write, find_sessions, read_session, write_session
from teamcomm.model import DaPair, GamePhase, validate_session
from teamcomm.network import Normalization, extract_adjacency_pairs
from teamcomm.stats import Correction
from teamcomm.synth import GENERATOR, SynthConfig, config_fingerprint, generate_corpus, load_profile
from teamcomm.timeline import Span, aggregate_band, bin_curve, phase_rate, progress_curve
from teamcomm.windows import Involvement, MoiConfig, parse_phase_bounds

log = logging.getLogger("teamcomm")


# -- table io -----------------------------------------------------------------


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _columns(rows, first=()) -> list[str]:
    cols = list(first)
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    return cols


def render_table(rows, meta: dict, fmt: str = "csv", first=()) -> str:
    if fmt == "json":
        return json.dumps({"meta": meta, "rows": rows}, indent=2, sort_keys=False, default=str) + "\n"
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True, default=str) + "\n")
    cols = _columns(rows, first)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in rows:
        writer.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


def write_table(path, rows, meta, fmt="csv", first=()) -> Path:
    path = Path(path)
    if fmt == "json" and path.suffix == ".csv":
        path = path.with_suffix(".json")
    atomic_write(path, render_table(rows, meta, fmt, first))
    return path


def _number(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def read_table(path) -> list[dict]:
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        return json.loads(text)["rows"]
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = []
    for raw in csv.DictReader(lines):
        rows.append({k: (None if v == "" else _number(v)) for k, v in raw.items()})
    return rows


# -- config --------------------------------------------------------------------


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("analysis options")
    g.add_argument("--moi-window-s", type=int, default=30, help="MoI window length in seconds (default 30)")
    g.add_argument("--pairing-gap-s", type=float, default=5, help="max start gap of an adjacency pair (default 5)")
    g.add_argument("--min-involved", type=int, default=3, help="players needed for a qualifying kill (default 3)")
    g.add_argument("--count-victim", action="store_true", help="count the victim toward --min-involved")
    g.add_argument("--min-speakers", type=int, default=2, help="distinct speakers required in a control window")
    g.add_argument("--normalization", choices=["pairs", "utterances"], default="pairs")
    g.add_argument("--phase-bounds", default="5,14,25", help="phase boundaries in minutes")
    g.add_argument("--pause-policy", choices=["drop", "clamp"], default="drop")
    g.add_argument("--strict", action="store_true", help="fail on malformed input rows")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=None, help="output file or directory")
    g.add_argument("--format", choices=["csv", "json"], default="csv")
    g.add_argument("--jobs", type=int, default=1, help="worker processes for per-session work")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def analysis_config(args) -> AnalysisConfig:
    pairs = None
    if getattr(args, "pairs", None):
        pairs = tuple(DaPair.parse(p) for p in args.pairs.split(","))
    return AnalysisConfig(
        moi=MoiConfig(
            window_ms=args.moi_window_s * 1000,
            min_kill_involvement=args.min_involved,
            involvement=Involvement.WITH_VICTIM if args.count_victim else Involvement.KILLER_ASSISTERS,
            min_speakers=args.min_speakers,
        ),
        ingest=IngestConfig(PausePolicy(args.pause_policy), args.strict),
        normalization=Normalization(args.normalization),
        max_gap_ms=int(round(args.pairing_gap_s * 1000)),
        pairs=pairs,
        top_k=getattr(args, "top_k", None),
        phase_bounds=parse_phase_bounds(args.phase_bounds),
        count_scope=getattr(args, "count_scope", "all"),
    )


def _meta(command: str, args, cfg=None, **extra) -> dict:
    echo = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "verbose", "jobs")}
    meta = {"tool": "teamcomm", "version": __version__, "command": command, "args": echo}
    if cfg is not None:
        meta["config"] = cfg.echo()
    meta.update(extra)
    return meta


def load_sessions(paths, cfg: IngestConfig):
    """Read every session directory; returns ``(sessions, failures)``."""
    sessions, failures = [], []
    for path in find_sessions(paths):
        issues = []
        try:
            s = read_session(path, cfg, issues)
        except (OSError, ValueError, KeyError, IngestError, SyncError) as exc:
            failures.append((str(path), str(exc)))
            log.error("%s: %s", path, exc)
            continue
        for issue in issues:
            log.warning("%s: %s %s", path, issue.code, issue.message)
        sessions.append(s)
    return sessions, failures


def _pool(args):
    return ProcessPoolExecutor(args.jobs) if args.jobs > 1 else None


# -- commands ---------------------------------------------------------------------


def cmd_ingest_check(args) -> int:
    cfg = analysis_config(args)
    rows, fatal = [], 0
    for path in find_sessions(args.inputs):
        issues = []
        try:
            s = read_session(path, cfg.ingest, issues)
        except (OSError, ValueError, KeyError) as exc:
            fatal += 1
            rows.append({"session": str(path), "code": "Fatal", "message": str(exc), "line": None})
            continue
        rows += [{"session": str(path), "code": i.code, "message": i.message, "line": i.line} for i in issues]
        rows += [{"session": str(path), "code": v.code, "message": v.message, "line": v.index} for v in validate_session(s)]
        if not issues and not validate_session(s):
            rows.append({"session": str(path), "code": "OK", "message": f"{len(s.utterances)} utterances, {len(s.events)} events", "line": None})
    text = render_table(rows, _meta("ingest-check", args), args.format, ("session", "code", "message", "line"))
    if args.out:
        atomic_write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 1 if fatal else 0


def cmd_analyze(args) -> int:
    cfg = analysis_config(args)
    sessions, failures = load_sessions(args.inputs, cfg.ingest)
    if not sessions:
        log.error("no readable sessions")
        return 2
    with_pool = _pool(args)
    try:
        result = analyze(sessions, cfg, with_pool)
    except ReportError as exc:
        log.error("%s", exc)
        return 2
    finally:
        if with_pool is not None:
            with_pool.shutdown()
    out = Path(args.out or "analysis")
    meta = _meta("analyze", args, cfg, tags=[str(t) for t in result.tags], failures=failures)
    write_table(out / "windows.csv", result.rows, meta, args.format)
    write_table(out / "summary.csv", result.summary, meta, args.format)
    freq = [{"rank": k, "pair": str(p), "count": c} for k, (p, c) in enumerate(result.table.sorted_desc, start=1)]
    write_table(out / "da_pairs.csv", freq, meta, args.format)
    log.info("wrote %d window rows for %d sessions to %s", len(result.rows), len(sessions), out)
    return 0


def cmd_compare_moi(args) -> int:
    rows = read_table(args.metrics)
    table, diagnostics = compare_moi(rows, args.keep_degenerate, args.mode)
    for d in diagnostics:
        log.warning("%s", d)
    meta = _meta("compare-moi", args, diagnostics=diagnostics)
    write_table(args.out or "compare_moi.csv", table, meta, args.format, STAT_COLUMNS)
    return 0


def cmd_compare_teams(args) -> int:
    rows = read_table(args.metrics)
    try:
        table = compare_teams(rows, args.grouping, args.kind, args.keep_degenerate, args.mode, Correction(args.correction))
    except ReportError as exc:
        log.error("%s", exc)
        return 2
    write_table(args.out or f"compare_{args.grouping}.csv", table, _meta("compare-teams", args), args.format, STAT_COLUMNS)
    return 0


def cmd_timeline(args) -> int:
    cfg = analysis_config(args)
    sessions, _ = load_sessions(args.inputs, cfg.ingest)
    if args.team:
        sessions = [s for s in sessions if args.team in (s.team_label, s.cohort.value)]
    if len(sessions) < 2:
        log.error("a confidence band needs at least two sessions, got %d", len(sessions))
        return 2
    pair = None if args.pair.lower() == "all" else DaPair.parse(args.pair)
    per_session = [(s, extract_adjacency_pairs(s.utterances, cfg.max_gap_ms)) for s in sessions]
    binned = []
    for s, pairs in per_session:
        curve = progress_curve(s.session_id, s.duration_ms, pairs, pair, cfg.moi.window_ms, Span(args.span))
        binned.append(bin_curve(curve.values, args.bin_pct))
    band = aggregate_band(binned, args.level, args.interval, args.bin_pct, args.seed)
    rows = [
        {"bin_start_pct": k * args.bin_pct, "mean": band.mean[k], "lo": band.lower[k], "hi": band.upper[k], "n": band.n[k]}
        for k in range(len(band.mean))
    ]
    meta = _meta("timeline", args, cfg)
    out = Path(args.out or "curve.csv")
    written = write_table(out, rows, meta, args.format)
    rates = phase_rate([(s.duration_ms, p) for s, p in per_session], pair, cfg.phase_bounds)
    rate_rows = []
    for ph in GamePhase:
        for s, value in zip(sessions, rates[ph]):
            rate_rows.append({"session_id": s.session_id, "team": s.team_label, "phase": ph.name, "pair": args.pair, "per_minute": value})
    write_table(written.with_name(written.stem + "_phase_rates" + written.suffix), rate_rows, meta, args.format)
    return 0


def cmd_da_pairs(args) -> int:
    cfg = analysis_config(args)
    sessions, _ = load_sessions(args.inputs, cfg.ingest)
    if not sessions:
        log.error("no readable sessions")
        return 2
    table = frequency_table([session_windows(s, cfg) for s in sessions], cfg.count_scope)
    rows = [{"rank": k, "pair": str(p), "count": c} for k, (p, c) in enumerate(table.sorted_desc, start=1)]
    write_table(args.out or "freq.csv", rows, _meta("da-pairs", args, cfg), args.format)
    return 0


def cmd_survey(args) -> int:
    rows, errors = parse_survey(Path(args.input).read_text(encoding="utf-8"), args.group_column)
    for e in errors:
        log.error("%s", e)
    if not rows:
        return 2
    try:
        table = compare_survey(rows, args.group_column, mode=args.mode, post_hoc=not args.no_post_hoc, correction=Correction(args.correction))
    except ReportError as exc:
        log.error("%s", exc)
        return 2
    write_table(args.out or "survey.csv", table, _meta("survey", args, row_errors=errors), args.format, STAT_COLUMNS)
    return 0


def cmd_synth(args) -> int:
    overrides = {"seed": args.seed}
    if args.team:
        overrides["team_label"] = args.team
    cfg = load_profile(args.profile, **overrides) if args.profile else SynthConfig(**overrides)
    out = Path(args.out or "synth")
    for session, truth in generate_corpus(cfg, args.games):
        meta = {
            "generator": GENERATOR,
            "config_fingerprint": config_fingerprint(cfg),
            "expected_mois": len(truth.expected_mois),
            "planted_replies": {str(k): v for k, v in sorted(truth.planted_replies.items())},
        }
        write_session(session, out / session.session_id, session.match_start_utc_ms - cfg.recording_lead_ms, meta)
    log.info("wrote %d sessions to %s", args.games, out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="teamcomm", description=__doc__)
    parser.add_argument("--version", action="version", version=f"teamcomm {__version__} ({kernels.BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _global_flags()

    p = sub.add_parser("ingest-check", parents=[common], help="parse and validate session directories")
    p.add_argument("inputs", nargs="+")
    p.set_defaults(func=cmd_ingest_check)

    p = sub.add_parser("analyze", parents=[common], help="per-window network metrics and summary")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--pairs", help="comma list of DA pairs (e.g. I:I,Q:I); default selects by elbow")
    p.add_argument("--top-k", type=int, help="use the k most frequent pairs instead of the elbow")
    p.add_argument("--count-scope", choices=["all", "moi"], default="all")
    p.set_defaults(func=cmd_analyze)

    for name, func, helptext in (
        ("compare-moi", cmd_compare_moi, "Wilcoxon MoI vs matched control"),
        ("compare-teams", cmd_compare_teams, "Mann-Whitney / Kruskal-Wallis between groups"),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("metrics", help="windows.csv (or .json) written by analyze")
        p.add_argument("--keep-degenerate", action="store_true", help="keep windows whose tag network has no pairs")
        p.add_argument("--mode", choices=["auto", "exact", "approx"], default="auto")
        if name == "compare-teams":
            p.add_argument("--grouping", choices=["cohort", "team"], default="cohort")
            p.add_argument("--kind", choices=["MoI", "NonMoI"], default="MoI")
            p.add_argument("--correction", choices=[c.value for c in Correction], default="none")
        p.set_defaults(func=func)

    p = sub.add_parser("timeline", parents=[common], help="binned progress curves, CI band and phase rates")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--pair", required=True, help="DA pair such as D:C, or 'all'")
    p.add_argument("--team", help="restrict to a team label or cohort")
    p.add_argument("--bin-pct", type=int, default=5)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--interval", choices=["t", "bootstrap"], default="t")
    p.add_argument("--span", choices=[s.value for s in Span], default="centered")
    p.set_defaults(func=cmd_timeline)

    p = sub.add_parser("da-pairs", parents=[common], help="DA-pair frequency table")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--count-scope", choices=["all", "moi"], default="all")
    p.set_defaults(func=cmd_da_pairs)

    p = sub.add_parser("survey", parents=[common], help="Kruskal-Wallis on Likert responses")
    p.add_argument("input", help="CSV with a group column and one column per question")
    p.add_argument("--group-column", default="group")
    p.add_argument("--mode", choices=["auto", "exact", "approx"], default="auto")
    p.add_argument("--no-post-hoc", action="store_true")
    p.add_argument("--correction", choices=[c.value for c in Correction], default="none")
    p.set_defaults(func=cmd_survey)

    p = sub.add_parser("synth", parents=[common], help="write synthetic sessions in the ingest formats")
    p.add_argument("--games", type=int, default=1)
    p.add_argument("--profile", help="TOML profile overriding SynthConfig fields")
    p.add_argument("--team", help="team label for the generated sessions")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
