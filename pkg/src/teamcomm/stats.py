"""Nonparametric tests with exact small-sample distributions.

Exact p-values are computed from integer arrangement counts (doubled midranks
keep tied ranks integral), so they equal brute-force enumeration exactly.
Two-sided p is the share of arrangements whose reported statistic
(``min`` of the two one-sided sums) is at most the observed one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations

from scipy import stats as _sp

from teamcomm import kernels

WILCOXON_EXACT_MAX = 20
MWU_EXACT_MAX_PRODUCT = 400


class Method(Enum):
    EXACT = "exact"
    NORMAL = "normal"
    CHI2 = "chi2"


class Correction(Enum):
    NONE = "none"
    BONFERRONI = "bonferroni"
    HOLM = "holm"


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    n: tuple[int, ...]
    method: Method
    degenerate: bool = False
    note: str = ""

    __test__ = False


def midranks(values) -> list[float]:
    """1-based ranks with ties sharing their average rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        r = (i + j + 2) / 2
        for k in range(i, j + 1):
            ranks[order[k]] = r
        i = j + 1
    return ranks


def tie_sizes(values) -> list[int]:
    counts: dict = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return [t for t in counts.values() if t > 1]


def _pick(mode: str, exact_ok: bool) -> bool:
    if mode not in ("auto", "exact", "approx"):
        raise ValueError(f"mode must be auto, exact or approx, not {mode!r}")
    return mode == "exact" or (mode == "auto" and exact_ok)


def wilcoxon_signed_rank(a, b=None, mode: str = "auto") -> TestResult:
    """Paired signed-rank test on ``a - b`` (or on ``a`` alone if ``b`` is None).

    The statistic is ``W = min(T+, T-)`` after dropping zero differences.
    """
    d = list(a) if b is None else [x - y for x, y in zip(a, b, strict=True)]
    if not d:
        raise ValueError("need at least one pair")
    n_all = len(d)
    d = [x for x in d if x != 0]
    m = len(d)
    if m == 0:
        return TestResult(0.0, 1.0, (n_all,), Method.EXACT, True, "all differences zero")
    ranks = midranks([abs(x) for x in d])
    t_plus = sum(r for r, x in zip(ranks, d) if x > 0)
    total = m * (m + 1) / 2
    w = min(t_plus, total - t_plus)

    if _pick(mode, m <= WILCOXON_EXACT_MAX):
        r2 = [int(round(2 * r)) for r in ranks]
        counts = kernels.signed_rank_counts(r2)
        s2, w2 = sum(r2), int(round(2 * w))
        hits = sum(c for s, c in enumerate(counts) if min(s, s2 - s) <= w2)
        return TestResult(w, hits / 2**m, (n_all,), Method.EXACT)

    mean = m * (m + 1) / 4
    var = m * (m + 1) * (2 * m + 1) / 24 - sum(t**3 - t for t in tie_sizes([abs(x) for x in d])) / 48
    if var <= 0:
        return TestResult(w, 1.0, (n_all,), Method.NORMAL, True, "zero variance")
    z = min(0.0, (w - mean + 0.5) / math.sqrt(var))
    return TestResult(w, min(1.0, 2 * float(_sp.norm.cdf(z))), (n_all,), Method.NORMAL)


def mann_whitney_u(a, b, mode: str = "auto") -> TestResult:
    """Two-sample rank-sum test reporting ``U = min(U_a, U_b)``."""
    a, b = list(a), list(b)
    na, nb = len(a), len(b)
    if not na or not nb:
        raise ValueError("both samples need at least one value")
    pooled = a + b
    ranks = midranks(pooled)
    ra = sum(ranks[:na])
    ua = ra - na * (na + 1) / 2
    u = min(ua, na * nb - ua)
    n = (na, nb)
    if len(set(pooled)) == 1:
        return TestResult(u, 1.0, n, Method.EXACT, True, "all values equal")

    if _pick(mode, na * nb <= MWU_EXACT_MAX_PRODUCT):
        r2 = [int(round(2 * r)) for r in ranks]
        k = min(na, nb)
        counts = kernels.rank_sum_counts(r2, k)
        offset2 = k * (k + 1)  # doubled k(k+1)/2
        prod2 = 2 * na * nb
        u2 = int(round(2 * u))
        hits = 0
        for s, c in enumerate(counts):
            if c:
                uk = s - offset2
                if min(uk, prod2 - uk) <= u2:
                    hits += c
        return TestResult(u, hits / math.comb(na + nb, k), n, Method.EXACT)

    big_n = na + nb
    ties = sum(t**3 - t for t in tie_sizes(pooled))
    var = na * nb / 12 * ((big_n + 1) - ties / (big_n * (big_n - 1)))
    mean = na * nb / 2
    z = min(0.0, (u - mean + 0.5) / math.sqrt(var))
    return TestResult(u, min(1.0, 2 * float(_sp.norm.cdf(z))), n, Method.NORMAL)


def kruskal_wallis(groups) -> TestResult:
    groups = [list(g) for g in groups]
    if len(groups) < 2:
        raise ValueError("need at least two groups")
    if any(not g for g in groups):
        raise ValueError("every group needs at least one value")
    pooled = [v for g in groups for v in g]
    big_n = len(pooled)
    sizes = tuple(len(g) for g in groups)
    if len(set(pooled)) == 1:
        return TestResult(0.0, 1.0, sizes, Method.CHI2, True, "all values equal")
    ranks = midranks(pooled)
    h = 0.0
    pos = 0
    for n_j in sizes:
        r_j = sum(ranks[pos:pos + n_j])
        h += r_j * r_j / n_j
        pos += n_j
    h = 12 / (big_n * (big_n + 1)) * h - 3 * (big_n + 1)
    h /= 1 - sum(t**3 - t for t in tie_sizes(pooled)) / (big_n**3 - big_n)
    h = max(h, 0.0)
    return TestResult(h, float(_sp.chi2.sf(h, len(groups) - 1)), sizes, Method.CHI2)


def adjust(pvalues, correction: Correction) -> list[float]:
    m = len(pvalues)
    if correction is Correction.NONE or m == 0:
        return list(pvalues)
    if correction is Correction.BONFERRONI:
        return [min(1.0, p * m) for p in pvalues]
    order = sorted(range(m), key=lambda i: pvalues[i])
    out = [0.0] * m
    running = 0.0
    for rank, i in enumerate(order):
        running = max(running, min(1.0, (m - rank) * pvalues[i]))
        out[i] = running
    return out


@dataclass(frozen=True)
class PairwiseResult:
    first: str
    second: str
    result: TestResult
    p_adjusted: float


def post_hoc_pairwise(groups: dict, mode: str = "auto", correction: Correction = Correction.NONE) -> list[PairwiseResult]:
    """Mann-Whitney U on every unordered pair of named groups."""
    if len(groups) < 3:
        raise ValueError("post hoc comparisons need at least three groups")
    names = list(groups)
    pairs = list(combinations(names, 2))
    results = [mann_whitney_u(groups[x], groups[y], mode) for x, y in pairs]
    adjusted = adjust([r.p_value for r in results], correction)
    return [PairwiseResult(x, y, r, p) for (x, y), r, p in zip(pairs, results, adjusted)]


@dataclass(frozen=True)
class Summary:
    n: int
    mean: float | None
    sd: float | None


def describe(values) -> Summary:
    values = [float(v) for v in values]
    n = len(values)
    if n == 0:
        return Summary(0, None, None)
    mean = math.fsum(values) / n
    sd = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1)) if n > 1 else None
    return Summary(n, mean, sd)


def descriptive(rows, by, value=None) -> dict:
    """Group ``rows`` (mappings) by the ``by`` key(s) and summarise.

    With ``value`` the summary describes that column; without it, each group
    summary counts rows.
    """
    keys = (by,) if isinstance(by, str) else tuple(by)
    grouped: dict = {}
    for row in rows:
        k = tuple(row[x] for x in keys)
        grouped.setdefault(k, []).append(row)
    out = {}
    for k in sorted(grouped, key=lambda t: tuple(str(x) for x in t)):
        members = grouped[k]
        label = k[0] if len(k) == 1 else k
        if value is None:
            out[label] = Summary(len(members), None, None)
        else:
            out[label] = describe(r[value] for r in members if r[value] is not None)
    return out


def stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""
