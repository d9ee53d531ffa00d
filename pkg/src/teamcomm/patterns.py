"""DA-pair frequencies and elbow-based selection of the frequent pairs."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from teamcomm.model import DaPair


class SelectionAmbiguous(ValueError):
    pass


@dataclass(frozen=True)
class DaPairFrequencyTable:
    counts: dict[DaPair, int]

    @classmethod
    def from_counter(cls, counter: Counter) -> "DaPairFrequencyTable":
        return cls({p: int(counter.get(p, 0)) for p in DaPair.all()})

    @property
    def sorted_desc(self) -> list[tuple[DaPair, int]]:
        # DaPair.all() order breaks ties
        order = {p: k for k, p in enumerate(DaPair.all())}
        return sorted(self.counts.items(), key=lambda pc: (-pc[1], order[pc[0]]))

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def merge(self, other: "DaPairFrequencyTable") -> "DaPairFrequencyTable":
        return DaPairFrequencyTable({p: self.counts[p] + other.counts[p] for p in self.counts})


def count_da_pairs(pair_lists) -> DaPairFrequencyTable:
    """Count ordered DA pairs over an iterable of adjacency-pair lists."""
    c: Counter = Counter()
    for pairs in pair_lists:
        c.update(p.da_pair for p in pairs)
    return DaPairFrequencyTable.from_counter(c)


def _normalize(v: list[float]) -> list[float]:
    lo, hi = min(v), max(v)
    span = hi - lo
    return [(x - lo) / span for x in v] if span else [0.0] * len(v)


def _extrema(d: list[float], greater: bool) -> list[int]:
    # neighbours beyond either end are clipped to the point itself
    n = len(d)
    out = []
    for i in range(n):
        left, right = d[max(i - 1, 0)], d[min(i + 1, n - 1)]
        if greater and d[i] >= left and d[i] >= right:
            out.append(i)
        elif not greater and d[i] <= left and d[i] <= right:
            out.append(i)
    return out


def kneedle_elbow(y, sensitivity: float = 1.0) -> int | None:
    """Knee of a decreasing, convex curve, as a 1-based index into ``y``.

    Offline Kneedle without smoothing: both axes are scaled to [0, 1], the
    curve is flipped so the knee becomes the peak of ``y' - x``, and the first
    local peak whose difference curve then falls below
    ``peak - S * mean(dx)`` before any local minimum is the knee.
    """
    y = [float(v) for v in y]
    n = len(y)
    if n < 3:
        raise ValueError("kneedle needs at least three points")
    if min(y) == max(y):
        return None  # a flat curve has no knee
    xn = _normalize(list(range(n)))
    yn = _normalize(y)
    top = max(yn)
    diff = [(top - a) - b for a, b in zip(yn, xn)]

    maxima = _extrema(diff, True)
    minima = set(_extrema(diff, False))
    if not maxima:
        return None
    step = sensitivity * abs(sum(b - a for a, b in zip(xn, xn[1:])) / (n - 1))
    maxima_set = set(maxima)
    threshold = 0.0
    anchor = None
    active = True
    for i in range(maxima[0], n - 1):
        if i in maxima_set:
            threshold = diff[i] - step
            anchor = i
            active = True
        if i in minima:
            threshold = 0.0
            active = False
        if active and diff[i + 1] < threshold:
            return anchor + 1
    return None


def select_frequent_pairs(
    table: DaPairFrequencyTable, k: int | None = None, sensitivity: float = 1.0
) -> list[DaPair]:
    ranked = table.sorted_desc
    if k is None:
        counts = [c for _, c in ranked]
        if table.total == 0:
            raise SelectionAmbiguous("all DA-pair counts are zero")
        k = kneedle_elbow(counts, sensitivity)
        if k is None:
            raise SelectionAmbiguous("no elbow in the DA-pair frequency curve")
    if k < 1 or k > len(ranked):
        raise ValueError(f"k must be within 1..{len(ranked)}")
    return [p for p, _ in ranked[:k]]
