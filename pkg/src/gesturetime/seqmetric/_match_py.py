"""Pure-Python monotone block matcher (fallback for the compiled kernel)."""

from __future__ import annotations


def match_monotone(ps, pe, ts, te, threshold):
    """Optimal one-to-one monotone matching of same-class blocks.

    ps/pe and ts/te are parallel lists of block starts/ends (frames) for the
    prediction and the truth side, both in sequence order. A pair (i, j) is
    admissible when |ps[i]-ts[j]| + |pe[i]-te[j]| <= threshold. Among all
    non-crossing admissible pairings the one maximizing the summed block
    lengths (pred + truth) is returned; ties are resolved toward the
    lexicographically earliest pairing by (truth index, pred index), which
    the reconstruction order match > skip-pred > skip-truth realizes.

    Returns a list of (pred_index, truth_index) pairs.
    """
    m, n = len(ps), len(ts)
    if m == 0 or n == 0:
        return []
    # best[i][j] = max mass using pred[i:], truth[j:]
    best = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m - 1, -1, -1):
        row = best[i]
        nxt = best[i + 1]
        for j in range(n - 1, -1, -1):
            v = nxt[j]
            if row[j + 1] > v:
                v = row[j + 1]
            if abs(ps[i] - ts[j]) + abs(pe[i] - te[j]) <= threshold:
                w = (pe[i] - ps[i]) + (te[j] - ts[j]) + nxt[j + 1]
                if w > v:
                    v = w
            row[j] = v
    pairs = []
    i = j = 0
    while i < m and j < n:
        v = best[i][j]
        if (abs(ps[i] - ts[j]) + abs(pe[i] - te[j]) <= threshold
                and (pe[i] - ps[i]) + (te[j] - ts[j]) + best[i + 1][j + 1] == v):
            pairs.append((i, j))
            i += 1
            j += 1
        elif best[i + 1][j] == v:
            i += 1
        else:
            j += 1
    return pairs
