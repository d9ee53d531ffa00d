"""Domain types shared by every stage of the pipeline.

All times on analysis types are integer milliseconds on the game-time axis
(0 at game start, frozen while the match is paused). Only :mod:`teamcomm.ingest`
deals with wall-clock (UTC) milliseconds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum

MIN_DURATION_MS = 15 * 60_000
TEAM_SIZE = 5


class ValidationError(ValueError):
    """Raised when a value violates a domain invariant."""


class DialogueAct(IntEnum):
    INFORM = 0
    QUESTION = 1
    DIRECTIVE = 2
    COMMISSIVE = 3

    @property
    def letter(self) -> str:
        return self.name[0]

    @classmethod
    def from_letter(cls, letter: str) -> "DialogueAct":
        for act in cls:
            if act.letter == letter.upper():
                return act
        raise ValidationError(f"unknown dialogue act {letter!r}")


class Role(IntEnum):
    TOP = 0
    JUNGLE = 1
    MID = 2
    BOT = 3
    SUPPORT = 4

    @property
    def letter(self) -> str:
        return self.name[0]

    @classmethod
    def parse(cls, name: str) -> "Role":
        key = name.strip().upper()
        for role in cls:
            if key in (role.name, role.letter):
                return role
        raise ValidationError(f"unknown role {name!r}")


class Side(Enum):
    BLUE = "blue"
    RED = "red"


class EventKind(Enum):
    CHAMPION_KILL = "ChampionKill"
    ELITE_MONSTER_KILL = "EliteMonsterKill"
    BUILDING_DESTRUCTION = "BuildingDestruction"


class Cohort(Enum):
    PROFESSIONAL = "professional"
    AMATEUR = "amateur"


class WindowKind(Enum):
    MOI = "MoI"
    NON_MOI = "NonMoI"


class GamePhase(IntEnum):
    EARLY_LANING = 0
    LATE_LANING = 1
    TEAM_FIGHT = 2
    ENDGAME = 3


def check_player(player: int) -> int:
    if isinstance(player, bool) or not isinstance(player, int) or not 1 <= player <= 10:
        raise ValidationError(f"player id {player!r} outside 1..10")
    return player


def role_of(player: int) -> Role:
    """Role of a player id; ids follow the standard position order per side."""
    return Role((check_player(player) - 1) % TEAM_SIZE)


def side_of(player: int) -> Side:
    return Side.BLUE if check_player(player) <= TEAM_SIZE else Side.RED


def team_ids(side: Side) -> tuple[int, ...]:
    first = 1 if side is Side.BLUE else TEAM_SIZE + 1
    return tuple(range(first, first + TEAM_SIZE))


@dataclass(frozen=True, order=True)
class DaPair:
    first: DialogueAct
    second: DialogueAct

    def __str__(self) -> str:
        return f"{self.first.letter}:{self.second.letter}"

    @property
    def code(self) -> int:
        return int(self.first) * 4 + int(self.second)

    @classmethod
    def parse(cls, text: str) -> "DaPair":
        """Parse ``"D:C"``, ``"D->C"`` or ``"DC"``."""
        cleaned = text.replace("->", ":").replace("→", ":").strip()
        parts = cleaned.split(":") if ":" in cleaned else list(cleaned)
        if len(parts) != 2:
            raise ValidationError(f"cannot parse DA pair {text!r}")
        return cls(DialogueAct.from_letter(parts[0]), DialogueAct.from_letter(parts[1]))

    @classmethod
    def all(cls) -> list["DaPair"]:
        return [cls(a, b) for a in DialogueAct for b in DialogueAct]


@dataclass(frozen=True)
class Utterance:
    speaker: int
    start_ms: int
    end_ms: int
    da: DialogueAct
    text: str = ""

    def sort_key(self) -> tuple:
        return (self.start_ms, self.end_ms, self.speaker, int(self.da), self.text)


@dataclass(frozen=True)
class GameEvent:
    kind: EventKind
    time_ms: int
    killer: int
    victim: int | None = None
    assisters: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        # keep assisters canonical so equality does not depend on input order
        object.__setattr__(self, "assisters", tuple(sorted(set(self.assisters))))

    def involved(self, count_victim: bool = False) -> int:
        n = 1 + len(self.assisters)
        if count_victim and self.victim is not None:
            n += 1
        return n


@dataclass(frozen=True)
class PauseInterval:
    start_utc_ms: int
    end_utc_ms: int

    @property
    def length_ms(self) -> int:
        return self.end_utc_ms - self.start_utc_ms


@dataclass(frozen=True)
class Session:
    session_id: str
    match_start_utc_ms: int
    duration_ms: int
    events: tuple[GameEvent, ...] = ()
    utterances: tuple[Utterance, ...] = ()
    pauses: tuple[PauseInterval, ...] = ()
    team_label: str = ""
    cohort: Cohort = Cohort.PROFESSIONAL

    def __post_init__(self) -> None:
        for name in ("events", "utterances", "pauses"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @property
    def speakers(self) -> tuple[int, ...]:
        return tuple(sorted({u.speaker for u in self.utterances}))


@dataclass(frozen=True)
class Window:
    start_ms: int
    end_ms: int
    kind: WindowKind

    @property
    def length_ms(self) -> int:
        return self.end_ms - self.start_ms

    def contains(self, t_ms: int) -> bool:
        return self.start_ms <= t_ms < self.end_ms

    def overlaps(self, other: "Window") -> bool:
        return self.start_ms < other.end_ms and other.start_ms < self.end_ms


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    index: int | None = field(default=None, compare=False)


def validate_session(s: Session) -> list[Violation]:
    """Collect every invariant violation of ``s``; an empty list means valid."""
    out: list[Violation] = []
    if s.duration_ms < MIN_DURATION_MS:
        out.append(Violation("TooShort", f"duration {s.duration_ms} ms below 15 minutes"))

    prev = None
    for i, e in enumerate(s.events):
        if not 0 <= e.time_ms <= s.duration_ms:
            out.append(Violation("EventOutOfRange", f"event at {e.time_ms} ms", i))
        ids = [e.killer, *e.assisters] + ([e.victim] if e.victim is not None else [])
        if any(isinstance(p, bool) or not isinstance(p, int) or not 1 <= p <= 10 for p in ids):
            out.append(Violation("ParticipantOutOfRange", f"event {i} participants {ids}", i))
        if (e.victim is not None) != (e.kind is EventKind.CHAMPION_KILL):
            out.append(Violation("VictimMismatch", f"{e.kind.value} victim={e.victim}", i))
        if e.killer in e.assisters:
            out.append(Violation("KillerAssists", f"killer {e.killer} also assists", i))
        if e.victim is not None and (e.victim == e.killer or e.victim in e.assisters):
            out.append(Violation("VictimParticipates", f"victim {e.victim} is a participant", i))
        if prev is not None and e.time_ms < prev:
            out.append(Violation("UnsortedEvents", f"event {i} before its predecessor", i))
        prev = e.time_ms

    prev_key = None
    for i, u in enumerate(s.utterances):
        if u.start_ms < 0:
            out.append(Violation("NegativeTime", f"utterance {i} starts at {u.start_ms}", i))
        if u.start_ms > u.end_ms:
            out.append(Violation("InvalidUtteranceSpan", f"utterance {i}: {u.start_ms} > {u.end_ms}", i))
        if isinstance(u.speaker, bool) or not isinstance(u.speaker, int) or not 1 <= u.speaker <= 10:
            out.append(Violation("ParticipantOutOfRange", f"utterance {i} speaker {u.speaker}", i))
        if not isinstance(u.da, DialogueAct):
            out.append(Violation("MissingDialogueAct", f"utterance {i} has no dialogue act", i))
        if prev_key is not None and u.start_ms < prev_key:
            out.append(Violation("UnsortedUtterances", f"utterance {i} before its predecessor", i))
        prev_key = u.start_ms
    sides = {(u.speaker - 1) // TEAM_SIZE for u in s.utterances if isinstance(u.speaker, int)}
    if len(sides) > 1:
        out.append(Violation("MixedTeams", "utterances come from both teams"))

    for i, p in enumerate(s.pauses):
        if p.start_utc_ms >= p.end_utc_ms:
            out.append(Violation("InvalidPause", f"pause {i} is empty or reversed", i))
        if i and p.start_utc_ms < s.pauses[i - 1].end_utc_ms:
            out.append(Violation("OverlappingPauses", f"pause {i} overlaps its predecessor", i))
    return out
