"""DA-pair trends over normalised game progress and per-phase pair rates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import stats as _sp

from teamcomm import kernels
from teamcomm.model import GamePhase
from teamcomm.windows import DEFAULT_PHASE_BOUNDS_MIN, phase_spans

STEPS = 100


class Span(Enum):
    CENTERED = "centered"  # [t - 15 s, t + 15 s)
    WIDE = "wide"  # [t - 30 s, t + 30 s)


@dataclass(frozen=True)
class ProgressCurve:
    session_id: str
    pair: object
    values: tuple[float | None, ...]


@dataclass(frozen=True)
class CiBand:
    bin_pct: int
    mean: tuple[float | None, ...]
    lower: tuple[float | None, ...]
    upper: tuple[float | None, ...]
    n: tuple[int, ...]


def progress_curve(session_id, duration_ms: int, pairs, pair=None, window_ms: int = 30_000, span: Span = Span.CENTERED) -> ProgressCurve:
    """Share of a session's pairs that match ``pair`` around each 1% of progress.

    ``pairs`` are the session's adjacency pairs (timestamped by the sender's
    start); ``pair=None`` counts every pair.
    """
    total = len(pairs)
    if total == 0:
        return ProgressCurve(session_id, pair, (None,) * STEPS)
    times = sorted(p.time_ms for p in pairs if pair is None or p.da_pair == pair)
    half = window_ms // 2 if span is Span.CENTERED else window_ms
    # scale by STEPS so t_p = p * duration / 100 stays an exact integer
    scaled = [t * STEPS for t in times]
    centers = [p * duration_ms for p in range(1, STEPS + 1)]
    counts = kernels.window_counts(scaled, centers, half * STEPS, half * STEPS)
    return ProgressCurve(session_id, pair, tuple(c / total for c in counts))


def bin_curve(values, bin_pct: int = 5) -> tuple[float | None, ...]:
    if bin_pct <= 0 or STEPS % bin_pct:
        raise ValueError("bin_pct must divide 100")
    values = list(values)
    if len(values) != STEPS:
        raise ValueError("curve must have 100 points")
    out = []
    for k in range(0, STEPS, bin_pct):
        present = [v for v in values[k:k + bin_pct] if v is not None]
        out.append(math.fsum(present) / len(present) if present else None)
    return tuple(out)


def aggregate_band(curves, level: float = 0.95, method: str = "t", bin_pct: int = 5, seed: int = 0, n_boot: int = 2000) -> CiBand:
    """Across-session mean and confidence band per bin.

    ``curves`` are equal-length sequences (already binned). ``method`` is
    ``"t"`` (Student t interval) or ``"bootstrap"`` (percentile bootstrap).
    """
    curves = [list(c) for c in curves]
    if len(curves) < 2:
        raise ValueError("a confidence band needs at least two curves")
    width = len(curves[0])
    rng = np.random.default_rng(seed)
    means, lows, highs, ns = [], [], [], []
    for k in range(width):
        col = [c[k] for c in curves if c[k] is not None]
        n = len(col)
        ns.append(n)
        if n == 0:
            means.append(None), lows.append(None), highs.append(None)
            continue
        mean = math.fsum(col) / n
        means.append(mean)
        if n < 2:
            lows.append(None), highs.append(None)
            continue
        if method == "bootstrap":
            arr = np.asarray(col)
            boots = arr[rng.integers(0, n, size=(n_boot, n))].mean(axis=1)
            lo, hi = np.quantile(boots, [(1 - level) / 2, (1 + level) / 2])
            lows.append(min(float(lo), mean)), highs.append(max(float(hi), mean))
        elif method == "t":
            sd = math.sqrt(math.fsum((v - mean) ** 2 for v in col) / (n - 1))
            half = float(_sp.t.ppf((1 + level) / 2, n - 1)) * sd / math.sqrt(n)
            lows.append(mean - half), highs.append(mean + half)
        else:
            raise ValueError(f"unknown interval method {method!r}")
    return CiBand(bin_pct, tuple(means), tuple(lows), tuple(highs), tuple(ns))


def phase_rate(sessions_pairs, pair=None, bounds_min=DEFAULT_PHASE_BOUNDS_MIN) -> dict[GamePhase, list[float | None]]:
    """Pairs per minute in each phase, one entry per session.

    ``sessions_pairs`` yields ``(duration_ms, pairs)``; phases are clipped to
    the session and a zero-length phase yields ``None``.
    """
    out: dict[GamePhase, list[float | None]] = {ph: [] for ph in GamePhase}
    for duration_ms, pairs in sessions_pairs:
        spans = phase_spans(duration_ms, bounds_min)
        times = [p.time_ms for p in pairs if pair is None or p.da_pair == pair]
        for ph, (a, b) in spans.items():
            if b <= a:
                out[ph].append(None)
                continue
            # the last phase keeps pairs stamped exactly at the final instant
            n = sum(1 for t in times if a <= t < b or (t == b == duration_ms))
            out[ph].append(n / ((b - a) / 60_000))
    return out
