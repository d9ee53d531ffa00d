"""Pure-Python versions of the hot kernels.

Each function here has a compiled twin in ``_speedups.pyx`` with the same
signature and results; :mod:`teamcomm.kernels` picks one at import time.
"""

from __future__ import annotations


def adjacent_pair_indices(starts, speakers, max_gap_ms):
    """Indices ``i`` such that utterances ``i`` and ``i + 1`` form a pair."""
    out = []
    for i in range(len(starts) - 1):
        if speakers[i] == speakers[i + 1]:
            continue
        if starts[i + 1] - starts[i] > max_gap_ms:
            continue
        out.append(i)
    return out


def degree_spread(weights, outgoing):
    """Return ``(sum_i (c_max - c_i), total_weight)`` for a 5x5 weight matrix."""
    n = len(weights)
    if outgoing:
        deg = [sum(row) for row in weights]
    else:
        deg = [sum(weights[i][j] for i in range(n)) for j in range(n)]
    top = max(deg)
    return sum(top - d for d in deg), sum(deg)


def signed_rank_counts(ranks2):
    """Null distribution of the positive-rank sum over all sign assignments.

    ``ranks2`` holds doubled (so integral) ranks. Entry ``s`` of the result is
    the number of the ``2**m`` assignments whose doubled positive sum is ``s``.
    """
    total = sum(ranks2)
    counts = [0] * (total + 1)
    counts[0] = 1
    reach = 0
    for r in ranks2:
        reach += r
        for s in range(reach, r - 1, -1):
            counts[s] += counts[s - r]
    return counts


def rank_sum_counts(ranks2, k):
    """Number of size-``k`` subsets of ``ranks2`` reaching each doubled rank sum."""
    total = sum(ranks2)
    table = [[0] * (total + 1) for _ in range(k + 1)]
    table[0][0] = 1
    reach = 0
    for r in ranks2:
        reach += r
        for j in range(k, 0, -1):
            row, prev = table[j], table[j - 1]
            for s in range(reach, r - 1, -1):
                c = prev[s - r]
                if c:
                    row[s] += c
    return table[k]


def window_counts(times, centers, half_lo, half_hi):
    """Count sorted ``times`` falling in ``[c - half_lo, c + half_hi)`` per center.

    All quantities are pre-scaled integers so membership is exact.
    """
    from bisect import bisect_left

    return [bisect_left(times, c + half_hi) - bisect_left(times, c - half_lo) for c in centers]
