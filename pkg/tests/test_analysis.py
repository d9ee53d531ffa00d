import pytest

from conftest import elite, session, utt
from teamcomm.analysis import (
    AnalysisConfig,
    ReportError,
    analyze,
    compare_moi,
    compare_survey,
    compare_teams,
    parse_survey,
)
from teamcomm.model import Cohort, DaPair
from teamcomm.network import Normalization
from teamcomm.synth import SynthConfig, generate_corpus

QI = DaPair.parse("Q:I")


def corpus(team, cohort, seed, games=4, **kw):
    cfg = SynthConfig(seed=seed, team_label=team, cohort=cohort, duration_ms=900_000, **kw)
    return [s for s, _ in generate_corpus(cfg, games)]


def test_rows_pair_each_moi_with_its_control():
    s = session([utt(1, 31_000, "Q"), utt(2, 32_000, "I"), utt(1, 62_000, "Q"), utt(3, 63_000, "I")], [elite(75_000)], duration_ms=900_000)
    res = analyze([s], AnalysisConfig(pairs=(QI,)))
    keyed = {(r["kind"], r["tag"]): r for r in res.rows}
    assert set(keyed) == {("MoI", "Q:I"), ("MoI", "All"), ("NonMoI", "Q:I"), ("NonMoI", "All")}
    moi, ctrl = keyed[("MoI", "Q:I")], keyed[("NonMoI", "Q:I")]
    assert (moi["start_ms"], ctrl["start_ms"], ctrl["end_ms"]) == (60_000, 30_000, 60_000)
    assert moi["rho"] == 0.1 and moi["c_od"] == 1.0 and moi["U"] == 1
    assert ctrl["event_time_ms"] == 75_000 and ctrl["pair_id"] == moi["pair_id"] == 0
    summary = {(r["group"], r["key"]): r for r in res.summary}
    assert summary[("all", "MoI")]["total"] == 1 and summary[("pairing", "paired")]["total"] == 1


def test_elbow_selection_and_top_k():
    sessions = corpus("A", Cohort.PROFESSIONAL, 1, games=3)
    res = analyze(sessions, AnalysisConfig(top_k=4))
    assert len(res.tags) == 4 and res.tags == [p for p, _ in res.table.sorted_desc[:4]]
    assert {r["tag"] for r in res.rows} == {str(t) for t in res.tags} | {"All"}


def test_utterance_normalization_is_recorded():
    res = analyze(corpus("A", Cohort.PROFESSIONAL, 2, games=2), AnalysisConfig(pairs=(QI,), normalization=Normalization.UTTERANCES))
    assert {r["normalization"] for r in res.rows} == {"utterances"}
    assert all(r["c_od"] <= 1 for r in res.rows)


def test_compare_moi_drops_degenerate_by_default():
    res = analyze(corpus("A", Cohort.PROFESSIONAL, 3), AnalysisConfig(pairs=(QI,)))
    kept, diag = compare_moi(res.rows)
    everything, _ = compare_moi(res.rows, keep_degenerate=True)
    n_kept = {r["pair"]: r["n1"] for r in kept}
    n_all = {r["pair"]: r["n1"] for r in everything}
    assert n_kept["Q:I"] < n_all["Q:I"]
    assert {r["metric"] for r in kept} == {"rho", "c_od", "c_id"}
    for r in kept:
        assert 0 <= r["p"] <= 1 and r["method"] in ("exact", "normal")
    assert all("share a control" in d or "no valid" in d for d in diag)


def test_compare_teams_cohort_and_team():
    rows = analyze(
        corpus("A", Cohort.PROFESSIONAL, 4) + corpus("B", Cohort.AMATEUR, 5) + corpus("C", Cohort.AMATEUR, 6),
        AnalysisConfig(pairs=(QI,)),
    ).rows
    cohort = compare_teams(rows, "cohort")
    assert {r["comparison"] for r in cohort} == {"amateur_vs_professional"}
    team = compare_teams(rows, "team")
    comps = [r["comparison"] for r in team]
    assert comps.count("kruskal_wallis") == 3 and "posthoc:A|B" in comps and comps.count("average") == 3
    with pytest.raises(ReportError):
        compare_teams([r for r in rows if r["team"] == "A"], "team")
    with pytest.raises(ReportError):
        compare_teams(rows, "role")


def test_survey_parsing_and_comparison():
    text = "group,q1,q2\nA,7,6\nA,6,6\nB,2,1\nB,3,x\nB,1,9\nC,4,4\nC,4,\n"
    rows, errors = parse_survey(text)
    assert len(rows) == 5 and len(errors) == 2
    table = compare_survey(rows)
    kw = [r for r in table if r["comparison"] == "kruskal_wallis"]
    assert [r["metric"] for r in kw] == ["q1", "q2"]
    assert kw[0]["mean[A]"] == 6.5 and kw[1]["n1"] == 4
    assert compare_survey(rows, post_hoc=False) == kw
    with pytest.raises(ReportError):
        parse_survey("team,q1\nA,1\n")
