from fractions import Fraction
from itertools import combinations, product

import pytest
import scipy.stats as sp
from hypothesis import given, strategies as st

from teamcomm.stats import (
    Correction,
    Method,
    adjust,
    describe,
    kruskal_wallis,
    mann_whitney_u,
    midranks,
    post_hoc_pairwise,
    stars,
    wilcoxon_signed_rank,
)


def wilcoxon_oracle(d):
    """Enumerate all 2^m sign flips of the nonzero differences (midranks, ties kept)."""
    d = [x for x in d if x != 0]
    ranks = [Fraction(r).limit_denominator(2) for r in midranks([abs(x) for x in d])]
    total = sum(ranks)
    obs = sum(r for r, x in zip(ranks, d) if x > 0)
    w = min(obs, total - obs)
    hits = 0
    for signs in product((0, 1), repeat=len(d)):
        t = sum(r for r, s in zip(ranks, signs) if s)
        hits += min(t, total - t) <= w
    return float(w), hits / 2 ** len(d)


def mwu_oracle(a, b):
    """Enumerate every relabelling of the pooled sample into groups of the observed sizes."""
    pooled = a + b
    ranks = [Fraction(r).limit_denominator(2) for r in midranks(pooled)]
    na, nb = len(a), len(b)
    off = Fraction(na * (na + 1), 2)

    def u_of(idx):
        ua = sum(ranks[i] for i in idx) - off
        return min(ua, na * nb - ua)

    obs = u_of(range(na))
    subsets = list(combinations(range(na + nb), na))
    return float(obs), sum(u_of(s) <= obs for s in subsets) / len(subsets)


def test_paper_scale_examples():
    r = wilcoxon_signed_rank([1, 2, 3, 4, 5])
    assert (r.statistic, r.p_value, r.method) == (0.0, 0.0625, Method.EXACT)
    r = mann_whitney_u([1, 2, 3], [4, 5, 6])
    assert (r.statistic, r.p_value) == (0.0, 0.1)
    r = kruskal_wallis([[1, 2], [3, 4], [5, 6]])
    assert abs(r.statistic - 32 / 7) <= 1e-12


@given(st.lists(st.integers(-6, 6), min_size=1, max_size=12))
def test_wilcoxon_equals_enumeration(d):
    if not any(d):
        assert wilcoxon_signed_rank(d).degenerate
        return
    r = wilcoxon_signed_rank(d, mode="exact")
    assert (r.statistic, r.p_value) == wilcoxon_oracle(d)


def test_wilcoxon_exhaustive_small_n():
    # every sign pattern of distinct magnitudes for n <= 12 reduces to subsets of 1..n
    for n in range(1, 13):
        for mask in (0, 1, 2**n - 1, 0b1010101010101 & (2**n - 1), 5 % (2**n)):
            d = [(k + 1) * (1 if mask >> k & 1 else -1) for k in range(n)]
            r = wilcoxon_signed_rank(d)
            assert (r.statistic, r.p_value) == wilcoxon_oracle(d)


@given(st.lists(st.integers(0, 5), min_size=1, max_size=6), st.lists(st.integers(0, 5), min_size=1, max_size=6))
def test_mann_whitney_equals_enumeration(a, b):
    r = mann_whitney_u(a, b, mode="exact")
    if r.degenerate:
        assert len(set(a + b)) == 1
        return
    assert (r.statistic, r.p_value) == mwu_oracle(a, b)


@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=15))
def test_wilcoxon_matches_scipy_without_ties(d):
    d = list(dict.fromkeys(abs(x) for x in d if x != 0))
    if not d:
        return
    ref = sp.wilcoxon(d, method="exact")
    r = wilcoxon_signed_rank(d)
    assert r.statistic == ref.statistic and abs(r.p_value - ref.pvalue) < 1e-12


def test_normal_approximations_match_scipy():
    import numpy as np

    rng = np.random.default_rng(0)
    for _ in range(50):
        d = rng.integers(-20, 20, size=40).tolist()
        ref = sp.wilcoxon(d, method="approx", correction=True, zero_method="wilcox")
        r = wilcoxon_signed_rank(d, mode="approx")
        assert abs(r.p_value - ref.pvalue) < 1e-10
        a, b = rng.integers(0, 30, size=25).tolist(), rng.integers(0, 30, size=30).tolist()
        ref = sp.mannwhitneyu(a, b, method="asymptotic", use_continuity=True)
        r = mann_whitney_u(a, b, mode="approx")
        assert r.statistic == min(ref.statistic, 25 * 30 - ref.statistic) and abs(r.p_value - ref.pvalue) < 1e-10
        groups = [rng.integers(0, 10, size=k).tolist() for k in (5, 8, 11)]
        ref = sp.kruskal(*groups)
        r = kruskal_wallis(groups)
        assert abs(r.statistic - ref.statistic) < 1e-10 and abs(r.p_value - ref.pvalue) < 1e-10


def test_mode_selection_and_errors():
    assert wilcoxon_signed_rank(list(range(1, 22))).method is Method.NORMAL
    assert wilcoxon_signed_rank(list(range(1, 22)), mode="exact").method is Method.EXACT
    assert mann_whitney_u(list(range(21)), list(range(30, 50))).method is Method.NORMAL
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([1, 2], mode="fast")
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([])
    with pytest.raises(ValueError):
        mann_whitney_u([], [1])
    with pytest.raises(ValueError):
        kruskal_wallis([[1, 2]])
    with pytest.raises(ValueError):
        kruskal_wallis([[1], []])
    assert kruskal_wallis([[1, 1], [1]]).degenerate


@given(st.lists(st.integers(0, 9), min_size=1, max_size=8), st.lists(st.integers(0, 9), min_size=1, max_size=8))
def test_p_values_are_probabilities_and_symmetric(a, b):
    r1, r2 = mann_whitney_u(a, b), mann_whitney_u(b, a)
    assert 0 < r1.p_value <= 1 and (r1.statistic, r1.p_value) == (r2.statistic, r2.p_value)


def test_adjustments_and_post_hoc():
    assert adjust([0.01, 0.04, 0.03], Correction.BONFERRONI) == pytest.approx([0.03, 0.12, 0.09])
    assert adjust([0.01, 0.04, 0.03], Correction.HOLM) == pytest.approx([0.03, 0.06, 0.06])
    res = post_hoc_pairwise({"A": [1, 2, 3], "B": [4, 5, 6], "C": [7, 8, 9]}, correction=Correction.BONFERRONI)
    assert [(r.first, r.second) for r in res] == [("A", "B"), ("A", "C"), ("B", "C")]
    assert all(r.p_adjusted == pytest.approx(0.3) for r in res)
    with pytest.raises(ValueError):
        post_hoc_pairwise({"A": [1], "B": [2]})


def test_descriptives_and_stars():
    d = describe([1, 2, 3, 4])
    assert d.mean == 2.5 and abs(d.sd - 1.2909944487358056) < 1e-15
    assert describe([3]).sd is None and describe([]).mean is None
    assert [stars(p) for p in (0.2, 0.05, 0.049, 0.01, 0.0099, 0.001, 0.0009)] == ["", "", "*", "*", "**", "**", "***"]
