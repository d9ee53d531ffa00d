from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from teamcomm import _fallback, kernels
from teamcomm.model import Cohort, DialogueAct, EventKind, GameEvent, Session, Utterance

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("default")

_compiled = kernels.compiled_module()
BACKENDS = [pytest.param(_fallback, id="python")]
if _compiled is not None:
    BACKENDS.append(pytest.param(_compiled, id="compiled"))


@pytest.fixture(params=BACKENDS)
def backend(request):
    """Each kernel implementation that is available in this build."""
    return request.param


def utt(speaker: int, start: int, da="I", end: int | None = None, text: str = "") -> Utterance:
    act = da if isinstance(da, DialogueAct) else DialogueAct.from_letter(da)
    return Utterance(speaker, start, start + 1_000 if end is None else end, act, text)


def kill(t: int, killer: int = 1, victim: int = 6, assisters=(2, 3)) -> GameEvent:
    return GameEvent(EventKind.CHAMPION_KILL, t, killer, victim, tuple(assisters))


def elite(t: int, killer: int = 2) -> GameEvent:
    return GameEvent(EventKind.ELITE_MONSTER_KILL, t, killer)


def session(utterances=(), events=(), duration_ms: int = 1_800_000, sid: str = "s", team: str = "A",
            cohort: Cohort = Cohort.PROFESSIONAL) -> Session:
    return Session(sid, 1_700_000_000_000, duration_ms, tuple(sorted(events, key=lambda e: e.time_ms)),
                   tuple(sorted(utterances, key=Utterance.sort_key)), (), team, cohort)


# -- acceptance report -----------------------------------------------------------

ACCEPTANCE: dict[int, tuple[bool, str, str]] = {}
N_CRITERIA = 10


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        if n not in ACCEPTANCE:
            terminalreporter.write_line(f"criterion {n:2d}: NOT RUN")
            continue
        ok, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title} | {detail}")
