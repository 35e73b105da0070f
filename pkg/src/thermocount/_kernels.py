"""Compiled branch-and-bound enumeration of words whose ergodic sums hit windows.

One depth-first walk over length-n words counts the hits for every threshold
t on a uniform grid ``t0 + j dt`` at once: the window for t is the open box
(t, t + xi) x (m t, m t + xi).  Pruning uses the bounds that remaining terms
lie in [min, max] of each table, for F, for G and for G - m F (the latter is
confined to (-m xi, xi) for every t).
"""
import math

import numba
import numpy as np
from numba import njit, prange

# the bundled TBB is too old on some systems; prefer OpenMP, then the builtin queue
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

SLACK = 1e-9


@njit(cache=True)
def _term(word, n, i, k, A, zhead, cyclic):
    code = 0
    for j in range(k):
        pos = i + j
        if pos < n:
            a = word[pos]
        elif cyclic:
            a = word[pos % n]
        else:
            a = zhead[pos - n]
        code = code * A + a
    return code


@njit(cache=True)
def dfs_count(T, k, ftab, gtab, n, prefix, cyclic, zhead,
              t0, dt, nt, m, xi, fmin, fmax, gmin, gmax, dmin, dmax, budget, counts):
    """Count words extending ``prefix`` into ``counts[j]`` for each grid t.

    Returns ``(nodes, aborted)``.  ``counts`` is incremented in place.
    """
    A = T.shape[0]
    plen = prefix.shape[0]
    word = np.zeros(n, dtype=np.int64)
    nxt = np.zeros(n + 1, dtype=np.int64)
    F = np.zeros(n + 1)
    G = np.zeros(n + 1)
    lo_F = t0
    hi_F = t0 + (nt - 1) * dt + xi
    lo_G = m * t0
    hi_G = m * (t0 + (nt - 1) * dt) + xi
    lo_D = -m * xi
    hi_D = xi
    for i in range(plen):
        word[i] = prefix[i]
    for i in range(plen - 1):
        if not T[word[i], word[i + 1]]:
            return 0, False
    done = plen - k + 1
    if done < 0:
        done = 0
    f = 0.0
    g = 0.0
    for i in range(done):
        c = _term(word, n, i, k, A, zhead, cyclic)
        f += ftab[c]
        g += gtab[c]
    F[plen] = f
    G[plen] = g
    nodes = 0
    d = plen
    nxt[d] = 0
    while d >= plen:
        if d == n:
            last_ok = T[word[n - 1], word[0]] if cyclic else T[word[n - 1], zhead[0]]
            if last_ok:
                f = F[n]
                g = G[n]
                start = n - k + 1
                if start < 0:
                    start = 0
                for i in range(start, n):
                    c = _term(word, n, i, k, A, zhead, cyclic)
                    f += ftab[c]
                    g += gtab[c]
                lo = max(f - xi, (g - xi) / m)
                hi = min(f, g / m)
                # candidates from the rounded interval, confirmed by the exact test
                j0 = int(math.floor((lo - t0) / dt)) - 1
                j1 = int(math.ceil((hi - t0) / dt)) + 1
                if j0 < 0:
                    j0 = 0
                if j1 > nt - 1:
                    j1 = nt - 1
                for j in range(j0, j1 + 1):
                    t = t0 + j * dt
                    if t < f and f < t + xi and m * t < g and g < m * t + xi:
                        counts[j] += 1
            d -= 1
            continue
        a = nxt[d]
        if d > 0:
            prev = word[d - 1]
            while a < A and not T[prev, a]:
                a += 1
        if a >= A:
            d -= 1
            continue
        nxt[d] = a + 1
        word[d] = a
        nodes += 1
        if nodes > budget:
            return nodes, True
        f = F[d]
        g = G[d]
        i = d - k + 1
        if i >= 0:
            c = _term(word, n, i, k, A, zhead, cyclic)
            f += ftab[c]
            g += gtab[c]
            rem = n - i - 1
        else:
            rem = n
        tol = SLACK * (1.0 + abs(f) + abs(g))
        if f + rem * fmin >= hi_F + tol or f + rem * fmax <= lo_F - tol:
            continue
        if g + rem * gmin >= hi_G + tol or g + rem * gmax <= lo_G - tol:
            continue
        dd = g - m * f
        if dd + rem * dmin >= hi_D + tol or dd + rem * dmax <= lo_D - tol:
            continue
        F[d + 1] = f
        G[d + 1] = g
        d += 1
        if d < n:
            nxt[d] = 0
    return nodes, False


@njit(cache=True, parallel=True)
def count_partitions(T, k, ftab, gtab, n, prefixes, cyclic, zhead,
                     t0, dt, nt, m, xi, fmin, fmax, gmin, gmax, dmin, dmax, budget):
    """Run :func:`dfs_count` on every prefix row; per-row counts and nodes."""
    P = prefixes.shape[0]
    counts = np.zeros((P, nt), dtype=np.int64)
    nodes = np.zeros(P, dtype=np.int64)
    aborted = np.zeros(P, dtype=np.bool_)
    for r in prange(P):
        row = counts[r]
        nd, ab = dfs_count(T, k, ftab, gtab, n, prefixes[r], cyclic, zhead,
                           t0, dt, nt, m, xi, fmin, fmax, gmin, gmax, dmin, dmax, budget, row)
        nodes[r] = nd
        aborted[r] = ab
    return counts, nodes, aborted
