# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled monotone block matcher; mirrors _match_py.match_monotone."""

from libc.stdlib cimport free, malloc


def match_monotone(ps, pe, ts, te, threshold):
    """See gesturetime.seqmetric._match_py.match_monotone."""
    cdef Py_ssize_t m = len(ps)
    cdef Py_ssize_t n = len(ts)
    if m == 0 or n == 0:
        return []

    cdef long long *aps = <long long *> malloc(m * sizeof(long long))
    cdef long long *ape = <long long *> malloc(m * sizeof(long long))
    cdef long long *ats = <long long *> malloc(n * sizeof(long long))
    cdef long long *ate = <long long *> malloc(n * sizeof(long long))
    cdef long long *best = <long long *> malloc((m + 1) * (n + 1) * sizeof(long long))
    if aps == NULL or ape == NULL or ats == NULL or ate == NULL or best == NULL:
        free(aps); free(ape); free(ats); free(ate); free(best)
        raise MemoryError()

    cdef Py_ssize_t i, j
    cdef long long T = threshold
    cdef long long v, w, dist
    try:
        for i in range(m):
            aps[i] = ps[i]
            ape[i] = pe[i]
        for j in range(n):
            ats[j] = ts[j]
            ate[j] = te[j]

        cols = n + 1
        for j in range(n + 1):
            best[m * cols + j] = 0
        for i in range(m - 1, -1, -1):
            best[i * cols + n] = 0
            for j in range(n - 1, -1, -1):
                v = best[(i + 1) * cols + j]
                if best[i * cols + j + 1] > v:
                    v = best[i * cols + j + 1]
                dist = llabs(aps[i] - ats[j]) + llabs(ape[i] - ate[j])
                if dist <= T:
                    w = (ape[i] - aps[i]) + (ate[j] - ats[j]) \
                        + best[(i + 1) * cols + j + 1]
                    if w > v:
                        v = w
                best[i * cols + j] = v

        pairs = []
        i = 0
        j = 0
        while i < m and j < n:
            v = best[i * cols + j]
            dist = llabs(aps[i] - ats[j]) + llabs(ape[i] - ate[j])
            if dist <= T and (ape[i] - aps[i]) + (ate[j] - ats[j]) \
                    + best[(i + 1) * cols + j + 1] == v:
                pairs.append((i, j))
                i += 1
                j += 1
            elif best[(i + 1) * cols + j] == v:
                i += 1
            else:
                j += 1
        return pairs
    finally:
        free(aps); free(ape); free(ats); free(ate); free(best)


cdef extern from "stdlib.h":
    long long llabs(long long x)
