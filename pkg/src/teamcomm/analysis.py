"""End-to-end analysis: sessions -> windows -> networks -> tables.

Every table is a list of plain dict rows so the CLI can write it as CSV or
JSON without further shaping.
"""

from __future__ import annotations

import csv
import dataclasses
import io
from collections import Counter
from dataclasses import dataclass, field

from teamcomm.ingest import IngestConfig
from teamcomm.model import DaPair, EventKind, GamePhase, Session
from teamcomm.network import (
    ALL,
    DEFAULT_MAX_GAP_MS,
    Normalization,
    build_networks,
    extract_adjacency_pairs,
    metrics,
)
from teamcomm.patterns import DaPairFrequencyTable, count_da_pairs, select_frequent_pairs
from teamcomm.stats import (
    Correction,
    describe,
    kruskal_wallis,
    mann_whitney_u,
    post_hoc_pairwise,
    stars,
    wilcoxon_signed_rank,
)
from teamcomm.windows import DEFAULT_PHASE_BOUNDS_MIN, MoiConfig, detect_mois, pair_all, phase_of

METRICS = ("rho", "c_od", "c_id")
STAT_COLUMNS = ("comparison", "pair", "metric", "stat", "p", "method", "n1", "n2")


class ReportError(ValueError):
    pass


@dataclass(frozen=True)
class AnalysisConfig:
    moi: MoiConfig = MoiConfig()
    ingest: IngestConfig = IngestConfig()
    normalization: Normalization = Normalization.PAIRS
    max_gap_ms: int = DEFAULT_MAX_GAP_MS
    pairs: tuple[DaPair, ...] | None = None  # None selects by elbow
    top_k: int | None = None
    phase_bounds: tuple[int, ...] = DEFAULT_PHASE_BOUNDS_MIN
    count_scope: str = "all"  # "all" windows or "moi" only
    sensitivity: float = 1.0

    def echo(self) -> dict:
        d = dataclasses.asdict(self)
        d["pairs"] = None if self.pairs is None else [str(p) for p in self.pairs]
        return _plain(d)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "value"):
        return obj.value
    return obj


@dataclass
class SessionWindows:
    session: Session
    paired: list
    unpaired: list
    window_pairs: dict = field(default_factory=dict)


def session_windows(s: Session, cfg: AnalysisConfig) -> SessionWindows:
    mois = detect_mois(s, cfg.moi)
    paired, unpaired = pair_all(s, mois, cfg.moi)
    out = SessionWindows(s, paired, unpaired)
    for idx, pw in enumerate(paired):
        out.window_pairs[("MoI", idx)] = extract_adjacency_pairs(pw.moi.utterances, cfg.max_gap_ms)
        out.window_pairs[("NonMoI", idx)] = extract_adjacency_pairs(pw.control.utterances, cfg.max_gap_ms)
    for j, m in enumerate(unpaired):
        out.window_pairs[("MoI", len(paired) + j)] = extract_adjacency_pairs(m.utterances, cfg.max_gap_ms)
    return out


def frequency_table(windows: list[SessionWindows], scope: str = "all") -> DaPairFrequencyTable:
    lists = [
        pairs
        for sw in windows
        for (kind, _), pairs in sw.window_pairs.items()
        if scope == "all" or kind == "MoI"
    ]
    return count_da_pairs(lists)


def choose_tags(windows: list[SessionWindows], cfg: AnalysisConfig) -> tuple[list[DaPair], DaPairFrequencyTable]:
    table = frequency_table(windows, cfg.count_scope)
    if cfg.pairs is not None:
        return list(cfg.pairs), table
    return select_frequent_pairs(table, cfg.top_k, cfg.sensitivity), table


def window_rows(sw: SessionWindows, tags, cfg: AnalysisConfig) -> list[dict]:
    s = sw.session
    rows = []
    entries = []
    for idx, pw in enumerate(sw.paired):
        entries.append(("MoI", idx, pw.moi.window, pw.moi.utterances, pw.moi.source_event))
        entries.append(("NonMoI", idx, pw.control.window, pw.control.utterances, pw.moi.source_event))
    for j, m in enumerate(sw.unpaired):
        entries.append(("MoI", len(sw.paired) + j, m.window, m.utterances, m.source_event))
    entries.sort(key=lambda e: (e[1], e[0] != "MoI"))
    for kind, idx, window, utts, event in entries:
        nets = build_networks(sw.window_pairs[(kind, idx)], tags)
        center = (window.start_ms + window.end_ms) // 2
        for tag in (*tags, ALL):
            m = metrics(nets[tag], cfg.normalization, len(utts))
            rows.append({
                "session_id": s.session_id,
                "team": s.team_label,
                "cohort": s.cohort.value,
                "pair_id": idx,
                "paired": idx < len(sw.paired),
                "kind": kind,
                "event_kind": event.kind.value,
                "event_time_ms": event.time_ms,
                "phase": phase_of(center, cfg.phase_bounds).name,
                "start_ms": window.start_ms,
                "end_ms": window.end_ms,
                "n_utterances": len(utts),
                "tag": str(tag),
                "rho": m.rho,
                "c_od": m.c_od,
                "c_id": m.c_id,
                "U": m.pair_count,
                "degenerate": m.degenerate,
                "normalization": cfg.normalization.value,
            })
    return rows


@dataclass
class AnalysisResult:
    rows: list[dict]
    summary: list[dict]
    tags: list[DaPair]
    table: DaPairFrequencyTable


def analyze(sessions, cfg: AnalysisConfig = AnalysisConfig(), pool=None) -> AnalysisResult:
    mapper = pool.map if pool is not None else map
    windows = list(mapper(_windows_job, [(s, cfg) for s in sessions]))
    tags, table = choose_tags(windows, cfg)
    rows = [r for sw in windows for r in window_rows(sw, tags, cfg)]
    return AnalysisResult(rows, summarize(windows, cfg), tags, table)


def _windows_job(args):
    return session_windows(*args)


def summarize(windows: list[SessionWindows], cfg: AnalysisConfig) -> list[dict]:
    """MoI counts per team, event kind and phase, with per-game mean and SD."""
    out = []
    per_game: dict[str, list[int]] = {}
    kind_per_game: dict[str, list[int]] = {k.value: [] for k in EventKind}
    phase_counts: Counter = Counter()
    paired = unpaired = 0
    for sw in windows:
        mois = [pw.moi for pw in sw.paired] + list(sw.unpaired)
        paired += len(sw.paired)
        unpaired += len(sw.unpaired)
        per_game.setdefault(sw.session.team_label, []).append(len(mois))
        kinds = Counter(m.source_event.kind.value for m in mois)
        for k in kind_per_game:
            kind_per_game[k].append(kinds.get(k, 0))
        phase_counts.update(phase_of(m.center_ms, cfg.phase_bounds).name for m in mois)

    def row(group, key, counts):
        d = describe(counts)
        return {"group": group, "key": key, "games": d.n, "total": int(sum(counts)), "mean_per_game": d.mean, "sd_per_game": d.sd}

    all_counts = [c for counts in per_game.values() for c in counts]
    out.append(row("all", "MoI", all_counts))
    for team in sorted(per_game):
        out.append(row("team", team, per_game[team]))
    for k, counts in kind_per_game.items():
        out.append(row("event_kind", k, counts))
    for ph in GamePhase:
        out.append({"group": "phase", "key": ph.name, "games": len(windows), "total": phase_counts.get(ph.name, 0), "mean_per_game": None, "sd_per_game": None})
    out.append({"group": "pairing", "key": "paired", "games": len(windows), "total": paired, "mean_per_game": None, "sd_per_game": None})
    out.append({"group": "pairing", "key": "unpaired", "games": len(windows), "total": unpaired, "mean_per_game": None, "sd_per_game": None})
    return out


# -- comparisons ---------------------------------------------------------------


def _tags_in(rows) -> list[str]:
    seen = []
    for r in rows:
        if r["tag"] not in seen:
            seen.append(r["tag"])
    return seen


def _fmt(x) -> float | None:
    return None if x is None else float(x)


def compare_moi(rows, keep_degenerate: bool = False, mode: str = "auto") -> tuple[list[dict], list[str]]:
    """MoI versus matched control, per tag and metric (Wilcoxon signed-rank)."""
    diagnostics = []
    out = []
    for tag in _tags_in(rows):
        moi, ctrl = {}, {}
        for r in rows:
            if r["tag"] != tag or not _truthy(r["paired"]):
                continue
            key = (r["session_id"], int(r["pair_id"]))
            (moi if r["kind"] == "MoI" else ctrl)[key] = r
        keys = sorted(k for k in moi if k in ctrl)
        if not keep_degenerate:
            keys = [k for k in keys if not _truthy(moi[k]["degenerate"]) and not _truthy(ctrl[k]["degenerate"])]
        if not keys:
            diagnostics.append(f"{tag}: no valid MoI/non-MoI pairs")
            continue
        controls = Counter((k[0], int(ctrl[k]["start_ms"])) for k in keys)
        shared = sum(c for c in controls.values() if c > 1)
        if shared:
            diagnostics.append(f"{tag}: {shared} of {len(keys)} MoIs share a control window with another MoI")
        for metric in METRICS:
            a = [float(moi[k][metric]) for k in keys]
            b = [float(ctrl[k][metric]) for k in keys]
            res = wilcoxon_signed_rank(a, b, mode)
            da, db = describe(a), describe(b)
            higher = ""
            if res.p_value < 0.05 and da.mean != db.mean:
                higher = "MoI" if da.mean > db.mean else "NonMoI"
            out.append({
                "comparison": "MoI_vs_NonMoI", "pair": tag, "metric": metric,
                "stat": res.statistic, "p": res.p_value, "method": res.method.value,
                "n1": len(a), "n2": len(b),
                "mean_1": da.mean, "sd_1": _fmt(da.sd), "mean_2": db.mean, "sd_2": _fmt(db.sd),
                "stars": stars(res.p_value), "higher": higher, "degenerate": res.degenerate,
            })
    return out, diagnostics


def _truthy(v) -> bool:
    if isinstance(v, str):
        return v.strip().lower() in ("true", "1", "yes")
    return bool(v)


def compare_teams(
    rows,
    grouping: str = "cohort",
    kind: str = "MoI",
    keep_degenerate: bool = False,
    mode: str = "auto",
    correction: Correction = Correction.NONE,
) -> list[dict]:
    """Between-group comparison of window metrics.

    ``grouping="cohort"`` runs Mann-Whitney U between the two cohorts;
    ``grouping="team"`` runs Kruskal-Wallis across teams followed by pairwise
    Mann-Whitney post hoc tests and per-team averages over tags.
    """
    if grouping not in ("cohort", "team"):
        raise ReportError(f"unknown grouping {grouping!r}")
    key = "cohort" if grouping == "cohort" else "team"
    sel = [r for r in rows if r["kind"] == kind and (keep_degenerate or not _truthy(r["degenerate"]))]
    groups = sorted({r[key] for r in sel})
    if len(groups) < 2:
        raise ReportError(f"need at least two {grouping} groups, found {groups}")
    tags = [t for t in _tags_in(sel) if t != ALL] or _tags_in(sel)
    out = []
    for metric in METRICS:
        team_means: dict[str, list[float]] = {g: [] for g in groups}
        for tag in tags:
            samples = {g: [float(r[metric]) for r in sel if r["tag"] == tag and r[key] == g] for g in groups}
            present = {g: v for g, v in samples.items() if v}
            summaries = {g: describe(v) for g, v in samples.items()}
            for g, d in summaries.items():
                if d.mean is not None:
                    team_means[g].append(d.mean)
            base = {"pair": tag, "metric": metric}
            for g, d in summaries.items():
                base[f"mean[{g}]"] = d.mean
                base[f"sd[{g}]"] = _fmt(d.sd)
            if len(present) < 2:
                continue
            if grouping == "cohort":
                (g1, v1), (g2, v2) = list(present.items())[:2]
                res = mann_whitney_u(v1, v2, mode)
                out.append({"comparison": f"{g1}_vs_{g2}", **base, "stat": res.statistic, "p": res.p_value,
                            "method": res.method.value, "n1": len(v1), "n2": len(v2), "stars": stars(res.p_value)})
                continue
            res = kruskal_wallis(list(present.values()))
            out.append({"comparison": "kruskal_wallis", **base, "stat": res.statistic, "p": res.p_value,
                        "method": res.method.value, "n1": sum(res.n), "n2": len(res.n), "stars": stars(res.p_value)})
            if len(present) >= 3:
                for ph in post_hoc_pairwise(present, mode, correction):
                    out.append({"comparison": f"posthoc:{ph.first}|{ph.second}", "pair": tag, "metric": metric,
                                "stat": ph.result.statistic, "p": ph.p_adjusted, "method": ph.result.method.value,
                                "n1": ph.result.n[0], "n2": ph.result.n[1], "stars": stars(ph.p_adjusted)})
        if grouping == "team":
            avg = {"comparison": "average", "pair": "Average", "metric": metric}
            for g, means in team_means.items():
                avg[f"mean[{g}]"] = sum(means) / len(means) if means else None
            out.append(avg)
    return out


def compare_survey(
    rows,
    group_column: str = "group",
    questions=None,
    mode: str = "auto",
    post_hoc: bool = True,
    correction: Correction = Correction.NONE,
) -> list[dict]:
    """Kruskal-Wallis per Likert question with per-group mean (SD)."""
    if not rows:
        raise ReportError("no survey responses")
    questions = questions or [c for c in rows[0] if c != group_column]
    groups = sorted({r[group_column] for r in rows})
    if len(groups) < 2:
        raise ReportError("survey comparison needs at least two groups")
    out = []
    for q in questions:
        samples = {g: [int(r[q]) for r in rows if r[group_column] == g and r[q] is not None] for g in groups}
        present = {g: v for g, v in samples.items() if v}
        res = kruskal_wallis(list(present.values()))
        row = {"comparison": "kruskal_wallis", "pair": "", "metric": q, "stat": res.statistic, "p": res.p_value,
               "method": res.method.value, "n1": sum(res.n), "n2": len(res.n), "stars": stars(res.p_value),
               "degenerate": res.degenerate}
        for g in groups:
            d = describe(samples[g])
            row[f"mean[{g}]"] = d.mean
            row[f"sd[{g}]"] = _fmt(d.sd)
        out.append(row)
        if post_hoc and len(present) >= 3:
            for ph in post_hoc_pairwise(present, mode, correction):
                out.append({"comparison": f"posthoc:{ph.first}|{ph.second}", "pair": "", "metric": q,
                            "stat": ph.result.statistic, "p": ph.p_adjusted, "method": ph.result.method.value,
                            "n1": ph.result.n[0], "n2": ph.result.n[1], "stars": stars(ph.p_adjusted)})
    return out


def parse_survey(text: str, group_column: str = "group") -> tuple[list[dict], list[str]]:
    """Read wide-format Likert CSV (one respondent per row); bad rows are reported and skipped."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or group_column not in reader.fieldnames:
        raise ReportError(f"survey CSV needs a {group_column!r} column")
    questions = [c for c in reader.fieldnames if c != group_column]
    rows, errors = [], []
    for n, raw in enumerate(reader, start=2):
        try:
            row = {group_column: raw[group_column].strip()}
            for q in questions:
                cell = (raw[q] or "").strip()
                if not cell:
                    row[q] = None
                    continue
                v = int(cell)
                if not 1 <= v <= 7:
                    raise ValueError(cell)
                row[q] = v
        except (ValueError, TypeError, AttributeError) as exc:
            errors.append(f"line {n}: malformed Likert value {exc}")
            continue
        rows.append(row)
    return rows, errors
