import random
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from teamcomm.model import DaPair
from teamcomm.patterns import (
    DaPairFrequencyTable,
    SelectionAmbiguous,
    kneedle_elbow,
    select_frequent_pairs,
)

FIG3_HEAD = [1232, 1130, 820, 819, 626, 269]
# the paper does not publish ranks 7-16; a monotone near-flat tail stands in
FIG3_TAIL = [200, 190, 180, 170, 160, 150, 140, 130, 120, 110]


def test_frozen_knees():
    assert kneedle_elbow(FIG3_HEAD + FIG3_TAIL) == 6
    assert kneedle_elbow([100, 50, 25, 12, 6, 3, 2, 1]) == 3
    assert kneedle_elbow([10, 9, 8, 7, 6, 5, 4, 3]) is None
    assert kneedle_elbow([5, 5, 5, 5]) is None
    with pytest.raises(ValueError):
        kneedle_elbow([3, 1])


def _kneed(y, s=1.0):
    kneed = pytest.importorskip("kneed")
    k = kneed.KneeLocator(list(range(len(y))), y, S=s, curve="convex", direction="decreasing", online=False)
    return None if k.knee is None else int(k.knee) + 1


def test_matches_kneed_on_random_decreasing_curves():
    pytest.importorskip("kneed")
    rng = random.Random(11)
    for _ in range(500):
        n = rng.randint(3, 20)
        y = sorted((rng.randint(0, 2_000) for _ in range(n)), reverse=True)
        if len(set(y)) == 1:
            continue
        s = rng.choice([0.5, 1.0, 2.0])
        assert kneedle_elbow(y, s) == _kneed(y, s), y


@given(st.lists(st.integers(0, 10_000), min_size=3, max_size=16).map(lambda v: sorted(v, reverse=True)))
def test_knee_is_within_curve(y):
    k = kneedle_elbow(y)
    assert k is None or 1 <= k <= len(y)


def table_from(counts):
    return DaPairFrequencyTable.from_counter(Counter(dict(zip(DaPair.all(), counts))))


def test_selection_uses_elbow_and_tie_order():
    counts = [0] * 16
    # give the paper's six pairs the Fig. 3 head counts
    for name, c in zip(["I:I", "Q:I", "D:C", "I:D", "I:Q", "C:I"], FIG3_HEAD):
        counts[DaPair.parse(name).code] = c
    rest = [i for i in range(16) if counts[i] == 0]
    for i, c in zip(rest, FIG3_TAIL):
        counts[i] = c
    chosen = select_frequent_pairs(table_from(counts))
    assert [str(p) for p in chosen] == ["I:I", "Q:I", "D:C", "I:D", "I:Q", "C:I"]
    assert [str(p) for p in select_frequent_pairs(table_from(counts), k=2)] == ["I:I", "Q:I"]
    tied = table_from([5] * 16)
    assert [str(p) for p, _ in tied.sorted_desc][:3] == ["I:I", "I:Q", "I:D"]


def test_selection_errors():
    with pytest.raises(SelectionAmbiguous):
        select_frequent_pairs(table_from([0] * 16))
    with pytest.raises(SelectionAmbiguous):
        select_frequent_pairs(table_from(list(range(16, 0, -1))))
    with pytest.raises(ValueError):
        select_frequent_pairs(table_from([1] * 16), k=17)


def test_table_merge_and_total():
    a, b = table_from([1] * 16), table_from(list(range(16)))
    assert a.merge(b).total == 16 + sum(range(16))
