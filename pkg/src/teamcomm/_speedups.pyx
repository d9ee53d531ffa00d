# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; mirrors ``_fallback`` exactly."""

from math import comb

from libc.stdlib cimport calloc, free

from teamcomm import _fallback

cdef long long _LIMIT = 1LL << 62


def adjacent_pair_indices(starts, speakers, long long max_gap_ms):
    cdef Py_ssize_t n = len(starts), i
    cdef long long[:] st
    cdef long long[:] sp
    if n < 2:
        return []
    import numpy as np
    st = np.asarray(starts, dtype=np.int64)
    sp = np.asarray(speakers, dtype=np.int64)
    out = []
    for i in range(n - 1):
        if sp[i] == sp[i + 1]:
            continue
        if st[i + 1] - st[i] > max_gap_ms:
            continue
        out.append(i)
    return out


def degree_spread(weights, bint outgoing):
    cdef long long w[5][5]
    cdef long long deg[5]
    cdef long long top = 0, spread = 0, total = 0
    cdef int i, j
    if len(weights) != 5:
        return _fallback.degree_spread(weights, outgoing)
    for i in range(5):
        row = weights[i]
        for j in range(5):
            w[i][j] = row[j]
    for i in range(5):
        deg[i] = 0
        for j in range(5):
            deg[i] += w[i][j] if outgoing else w[j][i]
        if i == 0 or deg[i] > top:
            top = deg[i]
        total += deg[i]
    for i in range(5):
        spread += top - deg[i]
    return spread, total


def signed_rank_counts(ranks2):
    cdef Py_ssize_t m = len(ranks2), total, s, reach = 0, idx
    cdef long long r
    cdef long long *counts
    if m >= 62:
        return _fallback.signed_rank_counts(ranks2)
    total = sum(ranks2)
    counts = <long long *> calloc(total + 1, sizeof(long long))
    if counts == NULL:
        raise MemoryError()
    try:
        counts[0] = 1
        for idx in range(m):
            r = ranks2[idx]
            reach += r
            s = reach
            while s >= r:
                counts[s] += counts[s - r]
                s -= 1
        return [counts[s] for s in range(total + 1)]
    finally:
        free(counts)


def rank_sum_counts(ranks2, int k):
    cdef Py_ssize_t n = len(ranks2), total, s, reach = 0, idx, width
    cdef int j
    cdef long long r, c
    cdef long long *table
    if comb(n, k) >= _LIMIT:
        return _fallback.rank_sum_counts(ranks2, k)
    total = sum(ranks2)
    width = total + 1
    table = <long long *> calloc((k + 1) * width, sizeof(long long))
    if table == NULL:
        raise MemoryError()
    try:
        table[0] = 1
        for idx in range(n):
            r = ranks2[idx]
            reach += r
            for j in range(k, 0, -1):
                s = reach
                while s >= r:
                    c = table[(j - 1) * width + s - r]
                    if c:
                        table[j * width + s] += c
                    s -= 1
        return [table[k * width + s] for s in range(width)]
    finally:
        free(table)


def window_counts(times, centers, long long half_lo, long long half_hi):
    cdef Py_ssize_t n = len(times), m = len(centers), i, lo = 0, hi = 0, a, b, mid
    cdef long long c, left, right
    cdef long long[:] t
    import numpy as np
    t = np.asarray(times, dtype=np.int64)
    out = [0] * m
    for i in range(m):
        c = centers[i]
        left = c - half_lo
        right = c + half_hi
        a, b = 0, n
        while a < b:
            mid = (a + b) // 2
            if t[mid] < left:
                a = mid + 1
            else:
                b = mid
        lo = a
        a, b = lo, n
        while a < b:
            mid = (a + b) // 2
            if t[mid] < right:
                a = mid + 1
            else:
                b = mid
        hi = a
        out[i] = hi - lo
    return out
