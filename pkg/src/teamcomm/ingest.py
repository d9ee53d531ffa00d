"""Readers and writers for logger output, and wall-clock to game-time sync.

File formats are documented in ``docs/formats.md``. A session directory holds

* ``session.json``: manifest (id, team, cohort, recording start, players)
* ``events.csv``: clock lines followed by the event table
* ``player_<id>.jsonl``: one transcript per recorded player
"""

from __future__ import annotations

import bisect
import json
import logging
import os
import re
import tempfile
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from teamcomm.model import (
    Cohort,
    DialogueAct,
    EventKind,
    GameEvent,
    PauseInterval,
    Role,
    Session,
    Utterance,
    ValidationError,
    role_of,
)

log = logging.getLogger(__name__)

EVENT_HEADER = ("kind", "time_ms", "killer", "victim", "assisters")
_CLOCK_LINE = re.compile(r"^\s*([a-z_]+)\s*=\s*(.*?)\s*$")


class IngestError(ValueError):
    """A malformed input row; ``code`` is machine readable."""

    def __init__(self, code: str, message: str, line: int | None = None):
        self.code = code
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{code}: {where}{message}")


class SyncError(ValueError):
    pass


class PausePolicy(Enum):
    DROP = "drop"
    CLAMP = "clamp"


@dataclass(frozen=True)
class IngestConfig:
    pause_policy: PausePolicy = PausePolicy.DROP
    strict: bool = False


@dataclass(frozen=True)
class RawRecordingMeta:
    recording_start_utc_ms: int

    def __post_init__(self) -> None:
        if self.recording_start_utc_ms < 0:
            raise ValidationError("recording start must be nonnegative")


@dataclass(frozen=True)
class Clock:
    match_start_utc_ms: int
    duration_ms: int
    pauses: tuple[PauseInterval, ...] = ()


@dataclass(frozen=True)
class Issue:
    code: str
    message: str
    line: int | None = None


@dataclass
class EventLog:
    events: list[GameEvent]
    clock: Clock
    issues: list[Issue] = field(default_factory=list)


@dataclass
class Transcript:
    speaker: int
    utterances: list[Utterance]
    issues: list[Issue] = field(default_factory=list)


def _report(issues: list[Issue], err: IngestError, strict: bool) -> None:
    if strict:
        raise err
    log.warning("%s", err)
    issues.append(Issue(err.code, str(err), err.line))


def _int(value: str, what: str, line: int) -> int:
    try:
        return int(value.strip())
    except ValueError:
        raise IngestError("UnparseableNumber", f"{what} {value!r} is not an integer", line) from None


def _player(value: str, what: str, line: int) -> int:
    pid = _int(value, what, line)
    if not 1 <= pid <= 10:
        raise IngestError("ParticipantOutOfRange", f"{what} id {pid} outside 1..10", line)
    return pid


def _parse_event_row(raw: str, line: int) -> GameEvent | None:
    # the assisters list is bracketed and may itself contain commas
    parts = raw.split(",", 4)
    if len(parts) != 5:
        raise IngestError("MalformedRow", f"expected 5 fields in {raw!r}", line)
    kind_s, time_s, killer_s, victim_s, assist_s = (p.strip() for p in parts)
    try:
        kind = EventKind(kind_s)
    except ValueError:
        return None
    time_ms = _int(time_s, "time_ms", line)
    if time_ms < 0:
        raise IngestError("UnparseableTimestamp", f"negative time {time_ms}", line)
    killer = _player(killer_s, "killer", line)
    victim = _player(victim_s, "victim", line) if victim_s else None
    if not (assist_s.startswith("[") and assist_s.endswith("]")):
        raise IngestError("MalformedRow", f"assisters {assist_s!r} not bracketed", line)
    inner = assist_s[1:-1].strip()
    assisters = tuple(_player(a, "assister", line) for a in inner.split(",")) if inner else ()
    if (victim is not None) != (kind is EventKind.CHAMPION_KILL):
        raise IngestError("VictimMismatch", f"{kind.value} with victim {victim_s!r}", line)
    if killer in assisters or (victim is not None and (victim == killer or victim in assisters)):
        raise IngestError("DuplicateParticipant", "participant listed twice", line)
    return GameEvent(kind, time_ms, killer, victim, assisters)


def parse_event_log(text: str, strict: bool = False) -> EventLog:
    """Parse an event log (clock section plus event table)."""
    issues: list[Issue] = []
    clock: dict[str, int] = {}
    pauses: list[PauseInterval] = []
    events: list[GameEvent] = []
    header_seen = False

    for n, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _CLOCK_LINE.match(stripped)
        if m:
            key, value = m.groups()
            try:
                if key == "pause":
                    a, _, b = value.partition(":")
                    p = PauseInterval(_int(a, "pause start", n), _int(b, "pause end", n))
                    if p.start_utc_ms >= p.end_utc_ms:
                        raise IngestError("InvalidPause", f"pause {value!r} is empty or reversed", n)
                    pauses.append(p)
                elif key in ("match_start_utc_ms", "duration_ms"):
                    clock[key] = _int(value, key, n)
                else:
                    raise IngestError("UnknownClockKey", f"unknown key {key!r}", n)
            except IngestError as err:
                _report(issues, err, strict)
            continue
        if not header_seen:
            if tuple(c.strip() for c in stripped.split(",")) == EVENT_HEADER:
                header_seen = True
            else:
                _report(issues, IngestError("MissingHeader", f"expected header before {stripped!r}", n), strict)
            continue
        try:
            event = _parse_event_row(stripped, n)
        except IngestError as err:
            _report(issues, err, strict)
            continue
        if event is None:
            kind = stripped.split(",", 1)[0]
            log.warning("line %d: skipping unknown event kind %r", n, kind)
            issues.append(Issue("UnknownEventKind", f"skipped kind {kind!r}", n))
            continue
        events.append(event)

    for key in ("match_start_utc_ms", "duration_ms"):
        if key not in clock:
            raise IngestError("MissingClock", f"clock key {key!r} absent")
    pauses.sort(key=lambda p: p.start_utc_ms)
    for a, b in zip(pauses, pauses[1:]):
        if b.start_utc_ms < a.end_utc_ms:
            raise IngestError("OverlappingPauses", f"pauses {a} and {b} overlap")
    events.sort(key=lambda e: e.time_ms)
    return EventLog(events, Clock(clock["match_start_utc_ms"], clock["duration_ms"], tuple(pauses)), issues)


def _speaker_matches(value, speaker: int) -> bool:
    if isinstance(value, bool):
        return False
    if isinstance(value, int):
        return value == speaker
    if isinstance(value, str):
        if value.strip().isdigit():
            return int(value) == speaker
        try:
            return Role.parse(value) is role_of(speaker)
        except ValidationError:
            return False
    return False


def parse_transcript(text: str, speaker: int, strict: bool = False) -> Transcript:
    """Parse one player's JSON-lines transcript.

    Offsets stay relative to the recording start; :func:`synchronize` moves
    them onto the game-time axis.
    """
    role_of(speaker)
    issues: list[Issue] = []
    out: list[Utterance] = []
    for n, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise IngestError("MalformedRow", f"bad JSON ({exc.msg})", n) from None
            if not isinstance(rec, dict):
                raise IngestError("MalformedRow", "record is not an object", n)
            missing = {"speaker", "text", "start_ms", "end_ms", "da"} - rec.keys()
            if missing:
                raise IngestError("MalformedRow", f"missing keys {sorted(missing)}", n)
            if not _speaker_matches(rec["speaker"], speaker):
                raise IngestError("SpeakerMismatch", f"speaker {rec['speaker']!r} in file of player {speaker}", n)
            da = rec["da"]
            if isinstance(da, bool) or not isinstance(da, int) or da not in (0, 1, 2, 3):
                raise IngestError("InvalidDialogueAct", f"DA code {da!r} not in 0..3", n)
            start, end = rec["start_ms"], rec["end_ms"]
            if not all(isinstance(v, int) and not isinstance(v, bool) for v in (start, end)):
                raise IngestError("UnparseableTimestamp", f"offsets {start!r}, {end!r}", n)
            if start < 0 or end < start:
                raise IngestError("InvalidUtteranceSpan", f"span [{start}, {end}]", n)
            out.append(Utterance(speaker, start, end, DialogueAct(da), str(rec["text"])))
        except IngestError as err:
            _report(issues, err, strict)
    out.sort(key=Utterance.sort_key)
    return Transcript(speaker, out, issues)


class GameClock:
    """Maps wall-clock instants to game time (frozen during pauses)."""

    def __init__(self, match_start_utc_ms: int, pauses=()):
        self.match_start = match_start_utc_ms
        self.pauses = tuple(sorted(pauses, key=lambda p: p.start_utc_ms))
        self._starts = [p.start_utc_ms for p in self.pauses]
        # paused wall time completed before each pause
        self._before = [0]
        for p in self.pauses:
            self._before.append(self._before[-1] + p.length_ms)
        # game-time instant at which each pause begins
        self._game_starts = [
            p.start_utc_ms - match_start_utc_ms - self._before[i] for i, p in enumerate(self.pauses)
        ]

    def to_game(self, wall_ms: int) -> int:
        i = bisect.bisect_right(self._starts, wall_ms)
        paused = self._before[i - 1] if i else 0
        if i:
            p = self.pauses[i - 1]
            paused += min(wall_ms, p.end_utc_ms) - p.start_utc_ms
        return wall_ms - self.match_start - paused

    def in_pause(self, wall_ms: int) -> bool:
        """True when ``wall_ms`` lies strictly inside a pause."""
        i = bisect.bisect_right(self._starts, wall_ms)
        return bool(i) and self.pauses[i - 1].start_utc_ms < wall_ms < self.pauses[i - 1].end_utc_ms

    def to_wall(self, game_ms: int) -> int:
        """Earliest wall instant mapping to ``game_ms``."""
        k = bisect.bisect_left(self._game_starts, game_ms)
        return self.match_start + game_ms + self._before[k]

    def total_paused(self) -> int:
        return self._before[-1]


def synchronize(
    clock: Clock,
    events: list[GameEvent],
    transcripts: dict[int, list[Utterance]],
    meta: RawRecordingMeta,
    cfg: IngestConfig = IngestConfig(),
    session_id: str = "session",
    team_label: str = "",
    cohort: Cohort = Cohort.PROFESSIONAL,
    issues: list[Issue] | None = None,
) -> Session:
    """Place every transcript on the game-time axis and assemble a Session."""
    gc = GameClock(clock.match_start_utc_ms, clock.pauses)
    match_end_wall = gc.to_wall(clock.duration_ms)
    if meta.recording_start_utc_ms > match_end_wall:
        raise SyncError(
            f"recording started at {meta.recording_start_utc_ms}, after match end {match_end_wall}"
        )
    issues = issues if issues is not None else []
    merged: list[Utterance] = []
    for speaker in sorted(transcripts):
        for u in transcripts[speaker]:
            wall_start = meta.recording_start_utc_ms + u.start_ms
            wall_end = meta.recording_start_utc_ms + u.end_ms
            if cfg.pause_policy is PausePolicy.DROP and gc.in_pause(wall_start):
                issues.append(Issue("DuringPause", f"player {speaker} utterance at {u.start_ms} dropped"))
                continue
            start = gc.to_game(wall_start)
            if start < 0 or start > clock.duration_ms:
                issues.append(Issue("OutsideGame", f"player {speaker} utterance at game time {start} dropped"))
                continue
            end = min(gc.to_game(wall_end), clock.duration_ms)
            merged.append(Utterance(u.speaker, start, end, u.da, u.text))
    for issue in issues:
        log.debug("%s: %s", issue.code, issue.message)
    merged.sort(key=Utterance.sort_key)
    return Session(
        session_id=session_id,
        match_start_utc_ms=clock.match_start_utc_ms,
        duration_ms=clock.duration_ms,
        events=tuple(sorted(events, key=lambda e: e.time_ms)),
        utterances=tuple(merged),
        pauses=clock.pauses,
        team_label=team_label,
        cohort=cohort,
    )


# -- writers -----------------------------------------------------------------


def format_event_log(events, clock: Clock) -> str:
    lines = [f"match_start_utc_ms={clock.match_start_utc_ms}", f"duration_ms={clock.duration_ms}"]
    lines += [f"pause={p.start_utc_ms}:{p.end_utc_ms}" for p in clock.pauses]
    lines.append(",".join(EVENT_HEADER))
    for e in events:
        victim = "" if e.victim is None else str(e.victim)
        assisters = "[" + ",".join(str(a) for a in e.assisters) + "]"
        lines.append(f"{e.kind.value},{e.time_ms},{e.killer},{victim},{assisters}")
    return "\n".join(lines) + "\n"


def format_transcript(utterances) -> str:
    rows = [
        json.dumps(
            {"speaker": u.speaker, "text": u.text, "start_ms": u.start_ms, "end_ms": u.end_ms, "da": int(u.da)},
            ensure_ascii=False,
        )
        for u in utterances
    ]
    return "".join(r + "\n" for r in rows)


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_session(session: Session, directory, recording_start_utc_ms: int | None = None, extra_meta=None) -> Path:
    """Export ``session`` as logger-format files that re-ingest to the same Session.

    Utterance offsets are written relative to ``recording_start_utc_ms``
    (default: the match start) using the earliest wall instant of each game time.
    """
    directory = Path(directory)
    rec_start = session.match_start_utc_ms if recording_start_utc_ms is None else recording_start_utc_ms
    gc = GameClock(session.match_start_utc_ms, session.pauses)
    by_player: dict[int, list[Utterance]] = {}
    for u in session.utterances:
        start = gc.to_wall(u.start_ms) - rec_start
        end = gc.to_wall(u.end_ms) - rec_start
        if start < 0:
            raise SyncError(f"utterance at game time {u.start_ms} precedes the recording start")
        by_player.setdefault(u.speaker, []).append(Utterance(u.speaker, start, end, u.da, u.text))

    players = sorted(by_player)
    manifest = {
        "session_id": session.session_id,
        "team_label": session.team_label,
        "cohort": session.cohort.value,
        "recording_start_utc_ms": rec_start,
        "players": players,
    }
    if extra_meta:
        manifest["meta"] = extra_meta
    clock = Clock(session.match_start_utc_ms, session.duration_ms, session.pauses)
    atomic_write(directory / "events.csv", format_event_log(session.events, clock))
    for pid in players:
        atomic_write(directory / f"player_{pid}.jsonl", format_transcript(by_player[pid]))
    atomic_write(directory / "session.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return directory


def read_session(directory, cfg: IngestConfig = IngestConfig(), issues: list[Issue] | None = None) -> Session:
    directory = Path(directory)
    issues = issues if issues is not None else []
    manifest = json.loads((directory / "session.json").read_text(encoding="utf-8"))
    parsed = parse_event_log((directory / "events.csv").read_text(encoding="utf-8"), strict=cfg.strict)
    issues.extend(parsed.issues)
    players = manifest.get("players")
    if players is None:
        players = sorted(int(p.stem.split("_", 1)[1]) for p in directory.glob("player_*.jsonl"))
    transcripts = {}
    for pid in players:
        path = directory / f"player_{pid}.jsonl"
        text = path.read_text(encoding="utf-8") if path.exists() else ""
        t = parse_transcript(text, int(pid), strict=cfg.strict)
        issues.extend(t.issues)
        transcripts[int(pid)] = t.utterances
    return synchronize(
        parsed.clock,
        parsed.events,
        transcripts,
        RawRecordingMeta(int(manifest["recording_start_utc_ms"])),
        cfg,
        session_id=str(manifest.get("session_id", directory.name)),
        team_label=str(manifest.get("team_label", "")),
        cohort=Cohort(manifest.get("cohort", Cohort.PROFESSIONAL.value)),
        issues=issues,
    )


def find_sessions(paths) -> list[Path]:
    """Expand inputs to session directories (a directory or its children)."""
    found: list[Path] = []
    for p in map(Path, paths):
        if (p / "session.json").exists():
            found.append(p)
        elif p.is_dir():
            found += sorted(c for c in p.iterdir() if (c / "session.json").exists())
        else:
            found.append(p)
    return found
