"""Seeded synthetic sessions with planted ground truth.

Randomness comes from numpy's counter-based Philox bit generator, so a seed
and a config pin the output exactly. Utterances are generated on the game-time
axis as a thinned Poisson stream of conversation openers, each optionally
answered by a teammate after a short gap.
"""

from __future__ import annotations

import bisect
import dataclasses
import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from teamcomm.model import (
    Cohort,
    DaPair,
    DialogueAct,
    EventKind,
    GameEvent,
    PauseInterval,
    Session,
    Side,
    Utterance,
    Window,
    WindowKind,
    team_ids,
)
from teamcomm.windows import MoiConfig, candidate_windows, phase_of

GENERATOR = "numpy.Philox"
UNIFORM_DA = (0.25, 0.25, 0.25, 0.25)


class SynthError(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    session_id: str | None = None
    duration_ms: int = 1_800_000
    match_start_utc_ms: int = 1_700_000_000_000
    recording_lead_ms: int = 1_500
    team_label: str = "synthetic"
    cohort: Cohort = Cohort.PROFESSIONAL
    side: Side = Side.BLUE
    # conversation openers per minute for the whole team, one rate per phase
    utterance_rate: tuple[float, float, float, float] = (12.0, 12.0, 12.0, 12.0)
    # per phase: probabilities of Inform, Question, Directive, Commissive openers
    da_distribution: tuple[tuple[float, ...], ...] = (UNIFORM_DA,) * 4
    # row = opener act, column = reply act; None reuses da_distribution
    reply_da: tuple[tuple[float, ...], ...] | None = None
    reply_probability: float = 0.5
    reply_gap_ms: tuple[int, int] = (500, 4_000)
    utterance_length_ms: tuple[int, int] = (600, 2_500)
    # share of openers per role (Top..Support)
    dominance_profile: tuple[float, ...] = (0.2,) * 5
    # weights for who answers; None answers uniformly among the other four
    reply_profile: tuple[float, ...] | None = None
    min_opener_spacing_ms: int = 0
    # expected events per minute, keyed by EventKind value
    event_rates: dict = field(default_factory=lambda: {"ChampionKill": 1.0, "EliteMonsterKill": 0.3, "BuildingDestruction": 0.4})
    # probabilities of 0..4 assisters on a kill
    assist_distribution: tuple[float, ...] = (0.15, 0.25, 0.25, 0.2, 0.15)
    events: tuple[GameEvent, ...] | None = None
    # opener rate multiplier inside +-15 s of qualifying events
    moi_rate_boost: float = 1.0
    # (game_time_ms, length_ms) pauses
    pauses: tuple[tuple[int, int], ...] = ()
    script: tuple[Utterance, ...] | None = None

    def validate(self) -> None:
        if self.duration_ms < 15 * 60_000:
            raise SynthError("duration below the 15-minute inclusion minimum")
        _probs(self.dominance_profile, 5, "dominance_profile")
        _probs(self.assist_distribution, 5, "assist_distribution")
        if len(self.da_distribution) != 4:
            raise SynthError("da_distribution needs one row per phase")
        for row in self.da_distribution:
            _probs(row, 4, "da_distribution")
        for row in self.reply_da or ():
            _probs(row, 4, "reply_da")
        if self.reply_da is not None and len(self.reply_da) != 4:
            raise SynthError("reply_da needs one row per opener act")
        if self.reply_profile is not None and (len(self.reply_profile) != 5 or min(self.reply_profile) < 0):
            raise SynthError("reply_profile needs five nonnegative weights")
        if any(r < 0 for r in self.utterance_rate) or len(self.utterance_rate) != 4:
            raise SynthError("utterance_rate needs four nonnegative rates")
        if any(r < 0 for r in self.event_rates.values()) or self.moi_rate_boost < 0:
            raise SynthError("rates must be nonnegative")
        if not 0 <= self.reply_probability <= 1:
            raise SynthError("reply_probability must lie in [0, 1]")
        lo, hi = self.utterance_length_ms
        glo, ghi = self.reply_gap_ms
        if not (0 < lo <= hi and 0 <= glo <= ghi):
            raise SynthError("length and gap ranges must be ordered and positive")
        # a speaker cannot talk over themselves: expected occupancy must stay below 1
        peak = max(self.utterance_rate) * max(1.0, self.moi_rate_boost) / 60_000
        mean_len = (lo + hi) / 2
        for share in self.dominance_profile:
            own = peak * (share + self.reply_probability) * mean_len
            if own >= 1.0:
                raise SynthError(f"utterance rate makes a speaker busy {own:.0%} of the time")


def _probs(row, n, what):
    if len(row) != n or min(row) < 0 or abs(sum(row) - 1) > 1e-9:
        raise SynthError(f"{what} must hold {n} probabilities summing to 1")


@dataclass(frozen=True)
class GroundTruth:
    event_windows: tuple[Window, ...]
    expected_mois: tuple[GameEvent, ...]
    planted_replies: dict
    opener_counts: dict
    dominance_order: tuple[int, ...]
    generator: str = GENERATOR


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def corpus_seeds(seed: int, games: int) -> list[int]:
    """Independent per-session seeds derived from one corpus seed."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(games, dtype=np.uint64)]


def _events(cfg: SynthConfig, rng) -> list[GameEvent]:
    if cfg.events is not None:
        return sorted(cfg.events, key=lambda e: e.time_ms)
    minutes = cfg.duration_ms / 60_000
    out = []
    for kind in EventKind:
        rate = cfg.event_rates.get(kind.value, 0.0)
        n = int(rng.poisson(rate * minutes))
        times = np.sort(rng.integers(0, cfg.duration_ms + 1, size=n))
        for t in times:
            side = Side.BLUE if rng.random() < 0.5 else Side.RED
            mates = list(team_ids(side))
            killer = int(rng.choice(mates))
            others = [p for p in mates if p != killer]
            k = int(rng.choice(5, p=cfg.assist_distribution))
            assisters = tuple(int(a) for a in rng.choice(others, size=k, replace=False))
            victim = None
            if kind is EventKind.CHAMPION_KILL:
                foes = team_ids(Side.RED if side is Side.BLUE else Side.BLUE)
                victim = int(rng.choice(foes))
            out.append(GameEvent(kind, int(t), killer, victim, assisters))
    out.sort(key=lambda e: (e.time_ms, e.kind.value, e.killer))
    return out


def _utterances(cfg: SynthConfig, rng, events) -> tuple[list[Utterance], Counter, Counter]:
    ids = team_ids(cfg.side)
    boost_windows = [w for w, _ in candidate_windows(_bare(cfg, events), MoiConfig())]
    boost_starts = [w.start_ms for w in boost_windows]

    lam_max = max(cfg.utterance_rate) * max(1.0, cfg.moi_rate_boost) / 60_000
    openers: Counter = Counter()
    replies: Counter = Counter()
    out: list[Utterance] = []
    if lam_max == 0:
        return out, openers, replies
    reply_w = np.asarray(cfg.reply_profile if cfg.reply_profile is not None else (1.0,) * 5, dtype=float)
    lo, hi = cfg.utterance_length_ms
    t = 0.0
    while True:
        t += rng.exponential(1 / lam_max)
        if t >= cfg.duration_ms:
            break
        ti = int(t)
        phase = phase_of(ti)
        lam = cfg.utterance_rate[phase] / 60_000
        if cfg.moi_rate_boost != 1.0 and _in_any(boost_windows, boost_starts, ti):
            lam *= cfg.moi_rate_boost
        if rng.random() * lam_max >= lam:
            continue
        role = int(rng.choice(5, p=cfg.dominance_profile))
        da = DialogueAct(int(rng.choice(4, p=cfg.da_distribution[phase])))
        end = min(ti + int(rng.integers(lo, hi + 1)), cfg.duration_ms)
        out.append(Utterance(ids[role], ti, end, da, f"utt-{len(out)}"))
        openers[ids[role]] += 1
        if rng.random() < cfg.reply_probability:
            w = reply_w.copy()
            w[role] = 0.0
            if w.sum() > 0:
                other = int(rng.choice(5, p=w / w.sum()))
                gap = int(rng.integers(cfg.reply_gap_ms[0], cfg.reply_gap_ms[1] + 1))
                rs = ti + gap
                if rs <= cfg.duration_ms:
                    row = cfg.reply_da[da] if cfg.reply_da is not None else cfg.da_distribution[phase_of(rs)]
                    rda = DialogueAct(int(rng.choice(4, p=row)))
                    rend = min(rs + int(rng.integers(lo, hi + 1)), cfg.duration_ms)
                    out.append(Utterance(ids[other], rs, rend, rda, f"utt-{len(out)}"))
                    replies[DaPair(da, rda)] += 1
        t += cfg.min_opener_spacing_ms
    return out, openers, replies


def _in_any(windows, starts, t) -> bool:
    i = bisect.bisect_right(starts, t)
    # windows share one length, so only those starting within one length can hold t
    j = i - 1
    while j >= 0 and t - windows[j].start_ms < windows[j].length_ms:
        if windows[j].contains(t):
            return True
        j -= 1
    return False


def _bare(cfg: SynthConfig, events) -> Session:
    return Session("tmp", cfg.match_start_utc_ms, cfg.duration_ms, tuple(events))


def _drop_self_overlap(utts: list[Utterance]) -> list[Utterance]:
    busy_until: dict[int, int] = {}
    kept = []
    for u in sorted(utts, key=Utterance.sort_key):
        if u.start_ms < busy_until.get(u.speaker, -1):
            continue
        busy_until[u.speaker] = u.end_ms
        kept.append(u)
    return kept


def _wall_pauses(cfg: SynthConfig) -> tuple[PauseInterval, ...]:
    out = []
    shift = 0
    for game_t, length in sorted(cfg.pauses):
        start = cfg.match_start_utc_ms + game_t + shift
        out.append(PauseInterval(start, start + length))
        shift += length
    return tuple(out)


def generate_session(cfg: SynthConfig) -> tuple[Session, GroundTruth]:
    cfg.validate()
    rng = _rng(cfg.seed)
    events = _events(cfg, rng)
    if any(not 0 <= e.time_ms <= cfg.duration_ms for e in events):
        raise SynthError("scripted event outside the game")
    if cfg.script is not None:
        utts = sorted(cfg.script, key=Utterance.sort_key)
        openers, replies = Counter(u.speaker for u in utts), Counter()
    else:
        raw, openers, replies = _utterances(cfg, rng, events)
        utts = _drop_self_overlap(raw)

    session = Session(
        session_id=cfg.session_id or f"synth-{cfg.seed}",
        match_start_utc_ms=cfg.match_start_utc_ms,
        duration_ms=cfg.duration_ms,
        events=tuple(events),
        utterances=tuple(utts),
        pauses=_wall_pauses(cfg),
        team_label=cfg.team_label,
        cohort=cfg.cohort,
    )
    windows = candidate_windows(session, MoiConfig())
    expected = []
    for w, e in windows:
        # independent linear scan rather than the bisect used by detect_mois
        if any(w.start_ms <= u.start_ms < w.end_ms for u in utts):
            expected.append(e)
    ids = team_ids(cfg.side)
    order = tuple(ids[i] for i in sorted(range(5), key=lambda i: (-cfg.dominance_profile[i], i)))
    truth = GroundTruth(
        event_windows=tuple(w for w, _ in windows),
        expected_mois=tuple(expected),
        planted_replies=dict(replies),
        opener_counts=dict(openers),
        dominance_order=order,
    )
    return session, truth


def generate_corpus(cfg: SynthConfig, games: int) -> list[tuple[Session, GroundTruth]]:
    out = []
    for k, seed in enumerate(corpus_seeds(cfg.seed, games)):
        sub = dataclasses.replace(cfg, seed=seed, session_id=f"{cfg.team_label}-{cfg.seed}-{k:03d}")
        out.append(generate_session(sub))
    return out


def config_fingerprint(cfg: SynthConfig) -> str:
    blob = json.dumps(_jsonable(dataclasses.asdict(cfg)), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "value"):
        return obj.value
    return obj


# -- profiles ----------------------------------------------------------------

_TUPLE_KEYS = {
    "utterance_rate", "reply_gap_ms", "utterance_length_ms", "dominance_profile",
    "reply_profile", "assist_distribution",
}


def config_from_mapping(data: dict, **overrides) -> SynthConfig:
    """Build a config from a parsed profile (TOML keys match field names)."""
    data = {**data, **overrides}
    known = {f.name for f in dataclasses.fields(SynthConfig)}
    unknown = set(data) - known
    if unknown:
        raise SynthError(f"unknown profile keys {sorted(unknown)}")
    kw = {}
    for k, v in data.items():
        if k in _TUPLE_KEYS and v is not None:
            v = tuple(v)
        elif k in ("da_distribution", "reply_da") and v is not None:
            v = tuple(tuple(row) for row in v)
        elif k == "pauses":
            v = tuple(tuple(p) for p in v)
        elif k == "cohort":
            v = Cohort(v)
        elif k == "side":
            v = Side(v)
        elif k == "events" and v is not None:
            v = tuple(
                GameEvent(EventKind(e["kind"]), int(e["time_ms"]), int(e["killer"]), e.get("victim"), tuple(e.get("assisters", ())))
                for e in v
            )
        kw[k] = v
    try:
        return SynthConfig(**kw)
    except TypeError as exc:
        raise SynthError(str(exc)) from None


def load_profile(path, **overrides) -> SynthConfig:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(Path(path), "rb") as fh:
        return config_from_mapping(tomllib.load(fh), **overrides)

