import pytest
from hypothesis import given, strategies as st

from conftest import elite, kill, session, utt
from teamcomm.model import EventKind, GameEvent, GamePhase, ValidationError
from teamcomm.windows import (
    Involvement,
    MoiConfig,
    NoValidControl,
    detect_mois,
    pair_all,
    pair_non_moi,
    parse_phase_bounds,
    phase_of,
    phase_spans,
)


def test_moi_window_is_centered_and_half_open():
    s = session([utt(1, 45_000), utt(2, 75_000), utt(3, 74_999)], [elite(60_000)])
    (m,) = detect_mois(s)
    assert (m.window.start_ms, m.window.end_ms) == (45_000, 75_000)
    assert [u.start_ms for u in m.utterances] == [45_000, 74_999]


def test_kill_qualification_threshold():
    two = kill(60_000, assisters=(2,))
    three = kill(90_000, assisters=(2, 3))
    s = session([utt(1, 60_000), utt(1, 90_000)], [two, three])
    assert [m.source_event for m in detect_mois(s)] == [three]
    with_victim = MoiConfig(involvement=Involvement.WITH_VICTIM)
    assert [m.source_event for m in detect_mois(s, with_victim)] == [two, three]
    assert len(detect_mois(s, MoiConfig(min_kill_involvement=4))) == 0


def test_objectives_always_qualify_and_empty_windows_are_excluded():
    s = session([utt(1, 200_000)], [GameEvent(EventKind.BUILDING_DESTRUCTION, 200_000, 1), elite(500_000)])
    assert [m.center_ms for m in detect_mois(s)] == [200_000]


def test_windows_past_either_edge_are_dropped():
    s = session([utt(1, 0), utt(1, 1_799_000)], [elite(14_999), elite(15_000), elite(1_785_000), elite(1_785_001)])
    assert [m.center_ms for m in detect_mois(s)] == [15_000, 1_785_000]


def test_control_immediately_before_moi():
    s = session([utt(1, 31_000), utt(2, 40_000), utt(3, 70_000)], [elite(75_000)])
    (m,) = detect_mois(s)
    pw = pair_non_moi(s, m, [m])
    assert (pw.control.window.start_ms, pw.control.window.end_ms) == (30_000, 60_000)
    assert pw.shift_ms == 0


def test_control_shifts_one_second_when_a_single_speaker():
    # window [30 s, 60 s) has one speaker; one step earlier picks up player 2 at 29.5 s
    s = session([utt(2, 29_500), utt(1, 31_000), utt(1, 40_000), utt(3, 70_000)], [elite(75_000)])
    (m,) = detect_mois(s)
    pw = pair_non_moi(s, m, [m])
    assert pw.control.window.start_ms == 29_000 and pw.shift_ms == 1_000
    assert pair_non_moi(s, m, [m], MoiConfig(min_speakers=1)).shift_ms == 0


def test_control_skips_past_earlier_moi():
    s = session([utt(1, 0), utt(2, 1_000), utt(1, 45_000), utt(3, 100_000)], [elite(60_000), elite(105_000)])
    mois = detect_mois(s)
    pw = pair_non_moi(s, mois[1], mois)
    # [60 s, 90 s) would overlap the first MoI [45 s, 75 s); the nearest clear start is 15 s
    # [60 s, 90 s) overlaps the first MoI [45 s, 75 s); [15 s, 45 s) is clear but silent,
    # and only [0 s, 30 s) holds two speakers
    assert pw.control.window.start_ms == 0


def test_no_valid_control_raises():
    s = session([utt(1, 20_000), utt(2, 21_000)], [elite(35_000)])
    (m,) = detect_mois(s)
    with pytest.raises(NoValidControl):
        pair_non_moi(s, m, [m])
    paired, unpaired = pair_all(s, [m])
    assert paired == [] and unpaired == [m]


def test_max_pairing_shift_limits_search():
    s = session([utt(1, 1_000), utt(2, 2_000), utt(3, 200_000)], [elite(215_000)])
    (m,) = detect_mois(s)
    assert pair_non_moi(s, m, [m]).control.window.start_ms == 1_000
    with pytest.raises(NoValidControl):
        pair_non_moi(s, m, [m], MoiConfig(max_pairing_shift_ms=60_000))


def brute_control(s, moi, mois, cfg):
    """Literal rule: step back one second at a time from the window ending at the MoI start."""
    start = moi.window.start_ms - cfg.window_ms
    while start >= 0:
        end = start + cfg.window_ms
        clear = all(end <= m.window.start_ms or start >= m.window.end_ms for m in mois)
        inside = [u for u in s.utterances if start <= u.start_ms < end]
        if clear and inside and len({u.speaker for u in inside}) >= cfg.min_speakers:
            return start
        start -= 1_000
    return None


sessions = st.builds(
    lambda us, es: session([utt(p, t) for p, t in us], [elite(t) for t in es], duration_ms=900_000),
    st.lists(st.tuples(st.integers(1, 5), st.integers(0, 900_000)), max_size=40),
    st.lists(st.integers(15_000, 885_000), max_size=8),
)


@given(sessions, st.integers(1, 3))
def test_pairing_matches_brute_force_scan(s, min_speakers):
    cfg = MoiConfig(min_speakers=min_speakers)
    mois = detect_mois(s, cfg)
    for m in mois:
        expected = brute_control(s, m, mois, cfg)
        try:
            got = pair_non_moi(s, m, mois, cfg).control.window.start_ms
        except NoValidControl:
            got = None
        assert got == expected


@given(sessions)
def test_mois_match_linear_scan(s):
    expected = [e for e in s.events if any(e.time_ms - 15_000 <= u.start_ms < e.time_ms + 15_000 for u in s.utterances)]
    assert [m.source_event for m in detect_mois(s)] == expected


@pytest.mark.parametrize(
    "t, phase",
    [(0, GamePhase.EARLY_LANING), (299_999, GamePhase.EARLY_LANING), (300_000, GamePhase.LATE_LANING),
     (839_999, GamePhase.LATE_LANING), (840_000, GamePhase.TEAM_FIGHT), (1_499_999, GamePhase.TEAM_FIGHT),
     (1_500_000, GamePhase.ENDGAME), (10**8, GamePhase.ENDGAME)],
)
def test_phase_boundaries(t, phase):
    assert phase_of(t) is phase


def test_phase_spans_clip_to_duration():
    assert phase_spans(1_000_000) == {
        GamePhase.EARLY_LANING: (0, 300_000), GamePhase.LATE_LANING: (300_000, 840_000),
        GamePhase.TEAM_FIGHT: (840_000, 1_000_000), GamePhase.ENDGAME: (1_000_000, 1_000_000),
    }


def test_phase_bounds_parsing():
    assert parse_phase_bounds("4,12,20") == (4, 12, 20)
    for bad in ("5,14", "14,5,25", "0,5,9", "5,5,9"):
        with pytest.raises(ValidationError):
            parse_phase_bounds(bad)
    with pytest.raises(ValidationError):
        phase_of(-1)
    with pytest.raises(ValidationError):
        MoiConfig(window_ms=29_999)
