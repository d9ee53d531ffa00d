"""Moments of interest, matched control windows, and game phases."""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from enum import Enum

from teamcomm.model import (
    EventKind,
    GameEvent,
    GamePhase,
    Session,
    Utterance,
    ValidationError,
    Window,
    WindowKind,
)

DEFAULT_PHASE_BOUNDS_MIN = (5, 14, 25)
SHIFT_STEP_MS = 1_000


class Involvement(Enum):
    KILLER_ASSISTERS = "killer+assisters"
    WITH_VICTIM = "killer+assisters+victim"


@dataclass(frozen=True)
class MoiConfig:
    window_ms: int = 30_000
    min_kill_involvement: int = 3
    involvement: Involvement = Involvement.KILLER_ASSISTERS
    min_speakers: int = 2
    max_pairing_shift_ms: int | None = None

    def __post_init__(self) -> None:
        if self.window_ms <= 0 or self.window_ms % 2:
            raise ValidationError("window_ms must be positive and even")
        if self.min_kill_involvement < 1:
            raise ValidationError("min_kill_involvement must be at least 1")

    @property
    def half_span_ms(self) -> int:
        return self.window_ms // 2


@dataclass(frozen=True)
class MoiWindow:
    window: Window
    source_event: GameEvent
    utterances: tuple[Utterance, ...]

    @property
    def center_ms(self) -> int:
        return self.source_event.time_ms


@dataclass(frozen=True)
class ControlWindow:
    window: Window
    utterances: tuple[Utterance, ...]


@dataclass(frozen=True)
class PairedWindows:
    moi: MoiWindow
    control: ControlWindow

    @property
    def shift_ms(self) -> int:
        return self.moi.window.start_ms - self.control.window.end_ms


class NoValidControl(LookupError):
    pass


def utterances_in(utterances, start_ms: int, end_ms: int, starts=None) -> tuple[Utterance, ...]:
    """Utterances whose start lies in ``[start_ms, end_ms)``; input sorted by start."""
    if starts is None:
        starts = [u.start_ms for u in utterances]
    lo = bisect.bisect_left(starts, start_ms)
    hi = bisect.bisect_left(starts, end_ms)
    return tuple(utterances[lo:hi])


def qualifies(event: GameEvent, cfg: MoiConfig) -> bool:
    if event.kind is not EventKind.CHAMPION_KILL:
        return True
    return event.involved(cfg.involvement is Involvement.WITH_VICTIM) >= cfg.min_kill_involvement


def candidate_windows(s: Session, cfg: MoiConfig = MoiConfig()) -> list[tuple[Window, GameEvent]]:
    """Windows of every qualifying event that fits inside the game, utterances ignored."""
    half = cfg.half_span_ms
    out = []
    for e in s.events:
        if not qualifies(e, cfg):
            continue
        start, end = e.time_ms - half, e.time_ms + half
        if start < 0 or end > s.duration_ms:
            continue
        out.append((Window(start, end, WindowKind.MOI), e))
    out.sort(key=lambda we: we[1].time_ms)
    return out


def detect_mois(s: Session, cfg: MoiConfig = MoiConfig()) -> list[MoiWindow]:
    utts = s.utterances
    starts = [u.start_ms for u in utts]
    out = []
    for window, event in candidate_windows(s, cfg):
        inside = utterances_in(utts, window.start_ms, window.end_ms, starts)
        if inside:
            out.append(MoiWindow(window, event, inside))
    return out


def pair_non_moi(s: Session, moi: MoiWindow, all_mois, cfg: MoiConfig = MoiConfig(), starts=None) -> PairedWindows:
    """Nearest earlier valid control window for ``moi``.

    Starts with the window ending at the MoI onset and moves back in 1 s steps
    until it overlaps no MoI, contains utterances, and has enough speakers.
    """
    utts = s.utterances
    if starts is None:
        starts = [u.start_ms for u in utts]
    blocked = [m.window if isinstance(m, MoiWindow) else m for m in all_mois]
    start = moi.window.start_ms - cfg.window_ms
    limit = 0
    if cfg.max_pairing_shift_ms is not None:
        limit = max(0, start - cfg.max_pairing_shift_ms)
    while start >= limit:
        cand = Window(start, start + cfg.window_ms, WindowKind.NON_MOI)
        clash = [b for b in blocked if cand.overlaps(b)]
        if clash:
            # every step until the candidate clears the earliest clash still overlaps it
            excess = start + cfg.window_ms - min(b.start_ms for b in clash)
            start -= -(-excess // SHIFT_STEP_MS) * SHIFT_STEP_MS
            continue
        inside = utterances_in(utts, cand.start_ms, cand.end_ms, starts)
        if inside and len({u.speaker for u in inside}) >= cfg.min_speakers:
            return PairedWindows(moi, ControlWindow(cand, inside))
        start -= SHIFT_STEP_MS
    raise NoValidControl(f"no control window for MoI at {moi.center_ms} ms")


def pair_all(s: Session, mois, cfg: MoiConfig = MoiConfig()) -> tuple[list[PairedWindows], list[MoiWindow]]:
    """Pair every MoI; returns ``(pairs, unpaired)``."""
    starts = [u.start_ms for u in s.utterances]
    paired, unpaired = [], []
    for m in mois:
        try:
            paired.append(pair_non_moi(s, m, mois, cfg, starts))
        except NoValidControl:
            unpaired.append(m)
    return paired, unpaired


def phase_of(time_ms: int, bounds_min=DEFAULT_PHASE_BOUNDS_MIN) -> GamePhase:
    if time_ms < 0:
        raise ValidationError(f"negative game time {time_ms}")
    for phase, bound in zip(GamePhase, bounds_min):
        if time_ms < bound * 60_000:
            return phase
    return GamePhase.ENDGAME


def phase_spans(duration_ms: int, bounds_min=DEFAULT_PHASE_BOUNDS_MIN) -> dict[GamePhase, tuple[int, int]]:
    """``[start, end)`` of each phase clipped to ``[0, duration_ms]``."""
    edges = [0, *(b * 60_000 for b in bounds_min), None]
    out = {}
    for phase, lo, hi in zip(GamePhase, edges, edges[1:]):
        a = min(lo, duration_ms)
        b = duration_ms if hi is None else min(hi, duration_ms)
        out[phase] = (a, b)
    return out


def parse_phase_bounds(text: str) -> tuple[int, ...]:
    bounds = tuple(int(x) for x in text.split(","))
    if len(bounds) != 3 or list(bounds) != sorted(set(bounds)) or bounds[0] <= 0:
        raise ValidationError(f"phase bounds must be three increasing positive minutes, got {text!r}")
    return bounds
