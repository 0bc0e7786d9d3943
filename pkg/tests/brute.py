"""Naive reference oracles used only by the tests.

Everything here enumerates chains or flip sets directly, sharing no code with
the package's dynamic programs.
"""
import itertools

import numpy as np


def points(n, d):
    return [tuple(p[::-1]) for p in itertools.product(range(n), repeat=d)]


def index(p, n):
    return sum(c * n ** i for i, c in enumerate(p))


def below(p, q):
    return p != q and all(a <= b for a, b in zip(p, q))


def all_chains(n, d):
    """Every strict chain of the grid, as tuples of point indices."""
    pts = points(n, d)
    up = {i: [j for j in range(len(pts)) if below(pts[i], pts[j])] for i in range(len(pts))}
    out = []

    def grow(ch):
        out.append(tuple(ch))
        for j in up[ch[-1]]:
            ch.append(j)
            grow(ch)
            ch.pop()

    for i in range(len(pts)):
        grow([i])
    return out


def longest_alternating(table, chains):
    best = 0
    for ch in chains:
        vals = [table[i] for i in ch]
        # the longest alternating subsequence starting at a 1
        run = 0
        last = None
        for v in vals:
            if run == 0:
                if v == 1:
                    run, last = 1, 1
            elif v != last:
                run, last = run + 1, v
        best = max(best, run)
    return best


def is_k_monotone(table, k, chains):
    return longest_alternating(table, chains) <= k


def flip_distance(table, k, chains):
    """Minimum number of flips reaching a k-monotone table, by increasing flip-set size."""
    N = len(table)
    t = list(table)
    for c in range(N + 1):
        for flips in itertools.combinations(range(N), c):
            g = t[:]
            for x in flips:
                g[x] ^= 1
            if is_k_monotone(g, k, chains):
                return c
    return N


def violating_edges(table, k, chains):
    out = set()
    for ch in chains:
        if len(ch) == k + 1 and all(table[x] == 1 - i % 2 for i, x in enumerate(ch)):
            out.add(ch)
    return sorted(out)


def tables(N):
    for m in range(1 << N):
        yield np.array([(m >> i) & 1 for i in range(N)], dtype=np.uint8)


def all_line_distances(n, kmax):
    """Flip distances to k-monotone for every table on [n] and every k <= kmax.

    A vectorized run-state recursion over all 2^n tables at once; state c counts
    runs since the first 1 and carries value c % 2. Returns (tables, dist) with
    dist[mask, k] an integer count (column 0 unused).
    """
    T = np.array(list(tables(n)), dtype=np.int64).reshape(1 << n, n)
    val = np.arange(kmax + 1) % 2
    D = np.zeros((1 << n, kmax + 1), dtype=np.int64)
    for i in range(n):
        D = np.minimum.accumulate(D, axis=1) + (val[None, :] != T[:, i:i + 1])
    best = np.minimum.accumulate(D, axis=1)
    return T, best
