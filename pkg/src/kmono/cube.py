"""One-sided non-adaptive tester for k-monotonicity on the hypercube.

Random points of the middle levels are expanded into superqueries: every
middle-level point comparable to them. The tester rejects only when the
queried points contain a forbidden alternating chain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded, PreconditionViolated
from .poset import ACCEPT, REJECT, Oracle, Verdict, cube, is_violation

SUPERQUERY_LIMIT = 1 << 16


@dataclass(frozen=True)
class MiddleWindow:
    """Hamming weights lo..hi; ``outside`` counts the cube points not covered."""
    d: int
    lo: int
    hi: int
    outside: int
    eps: float

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1

    @property
    def covered(self) -> int:
        return 2 ** self.d - self.outside

    def __contains__(self, w: int) -> bool:
        return self.lo <= w <= self.hi

    def to_json(self) -> dict:
        return {"d": self.d, "lo": self.lo, "hi": self.hi, "outside": self.outside,
                "eps": self.eps}


def middle_window(d: int, eps: float) -> MiddleWindow:
    """Narrowest window symmetric about d/2 leaving at most eps 2^(d-1) points outside.

    The mass outside is an exact sum of binomial coefficients.
    """
    if d < 1 or not 0 < eps <= 1:
        raise PreconditionViolated("need d >= 1 and eps in (0, 1]")
    limit = eps * 2 ** (d - 1)
    binom = [math.comb(d, w) for w in range(d + 1)]
    lo, hi = d // 2, (d + 1) // 2
    while True:
        outside = sum(binom[:lo]) + sum(binom[hi + 1:])
        if outside <= limit:
            return MiddleWindow(d, lo, hi, outside, eps)
        lo, hi = lo - 1, hi + 1


def _popcount(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    out = np.zeros_like(a)
    while np.any(a):
        out += a & 1
        a = a >> 1
    return out


def _submasks(mask: int) -> np.ndarray:
    """All submasks of ``mask`` (including 0 and mask itself)."""
    bits = [1 << i for i in range(mask.bit_length()) if mask >> i & 1]
    out = np.zeros(1, dtype=np.int64)
    for b in bits:
        out = np.concatenate([out, out | b])
    return out


def superquery_points(d: int, x: int, window: MiddleWindow) -> np.ndarray:
    """Points y with y <= x or y >= x and |y| in the window, sorted."""
    w = int(_popcount(x))
    if w not in window:
        raise PreconditionViolated(f"|x| = {w} lies outside the window")
    full = (1 << d) - 1
    # a superquery at weight w spans at most sum_j C(w, j) + C(d - w, j) points
    size = sum(math.comb(w, w - j) for j in range(0, w - window.lo + 1)) + \
        sum(math.comb(d - w, j) for j in range(0, window.hi - w + 1)) - 1
    if size > SUPERQUERY_LIMIT:
        raise BudgetExceeded(f"a superquery would read {size} points")
    below = _submasks(x)
    below = below[_popcount(below) >= window.lo]
    above = x | _submasks(full & ~x)
    above = above[_popcount(above) <= window.hi]
    return np.union1d(below, above)


def superquery(f: Oracle, x: int, window: MiddleWindow) -> dict:
    """Read f on the superquery of x; returns {point: value}."""
    pts = superquery_points(f.domain.d, x, window)
    return dict(zip(pts.tolist(), f.many(pts).tolist()))


def sample_middle(d: int, window: MiddleWindow, s: int, rng) -> np.ndarray:
    """s uniform points of the window levels: a weight by its level size, then a subset."""
    weights = np.array([math.comb(d, w) for w in range(window.lo, window.hi + 1)], dtype=float)
    ws = window.lo + rng.choice(weights.size, size=s, p=weights / weights.sum())
    out = np.zeros(s, dtype=np.int64)
    for i, w in enumerate(ws):
        for b in rng.choice(d, size=int(w), replace=False):
            out[i] |= 1 << int(b)
    return out


def truncated_value(value: int, weight: int, window: MiddleWindow, k: int) -> int:
    """The value used in the violation search for a point of the given weight.

    Points below the window read as 0. Points above read as 1 for odd k and
    0 for even k. A chain must start at a 1 and end at 0 (odd k) or 1 (even
    k), so under this rule no forbidden chain of a k-monotone function can
    use a truncated point.
    """
    if weight < window.lo:
        return 0
    if weight > window.hi:
        return k % 2
    return value


def longest_alternating_in(points: np.ndarray, values: np.ndarray, d: int):
    """Longest alternating chain starting at a 1 inside a set of cube points.

    Returns (length, chain) with the chain as point masks in increasing order.
    The DP sweeps the whole cube by weight; points outside the set only pass
    the best chain ends of their lower covers upwards.
    """
    N = 1 << d
    pts = np.asarray(points, dtype=np.int64)
    val = np.full(N, -1, dtype=np.int8)
    val[pts] = np.asarray(values, dtype=np.int8)
    # best[b][x]: longest chain ending at a set point y <= x with f(y) = b; arg[b][x] = that y
    best = np.zeros((2, N), dtype=np.int64)
    arg = np.full((2, N), -1, dtype=np.int64)
    L = np.zeros(N, dtype=np.int64)
    parent = np.full(N, -1, dtype=np.int64)
    weight = _popcount(np.arange(N))
    for w in range(d + 1):
        xs = np.flatnonzero(weight == w)
        for i in range(d):
            has = (xs >> i) & 1 == 1
            x, y = xs[has], xs[has] ^ (1 << i)
            for b in (0, 1):
                up = best[b, y] > best[b, x]
                best[b, x[up]] = best[b, y[up]]
                arg[b, x[up]] = arg[b, y[up]]
        v = val[xs]
        for b in (0, 1):
            x = xs[v == b]
            other = best[1 - b, x]
            ext = np.where(other > 0, other + 1, 0)
            L[x] = np.maximum(ext, 1 if b == 1 else 0)
            parent[x] = np.where(other > 0, arg[1 - b, x], -1)
            up = L[x] > best[b, x]
            best[b, x[up]] = L[x[up]]
            arg[b, x[up]] = x[up]
    if pts.size == 0 or L.max() == 0:
        return 0, ()
    i = int(np.argmax(L))
    chain = []
    while i >= 0:
        chain.append(i)
        i = int(parent[i])
    return int(L.max()), tuple(reversed(chain))


def cube_sample_count(eps: float, c: float = 8.0) -> int:
    return math.ceil(c / eps)


def test_cube_one_sided(f: Oracle, k: int, eps: float, seed=None, c: float = 8.0) -> Verdict:
    """Sample c/eps middle-level points, read their superqueries, search for a violation."""
    dom = f.domain
    if dom.kind != "cube":
        raise PreconditionViolated("the hypercube tester needs a cube domain")
    d = dom.d
    window = middle_window(d, eps)
    rng = np.random.default_rng(seed)
    start = f.queries
    xs = sample_middle(d, window, cube_sample_count(eps, c), rng)
    # non-adaptive: the union of all superqueries is read once
    pts = np.unique(np.concatenate([superquery_points(d, int(x), window) for x in xs]))
    vals = f.many(pts)
    length, chain = longest_alternating_in(pts, vals, d)
    details = {"window": [window.lo, window.hi], "samples": int(xs.size),
               "points": int(pts.size)}
    if k % 2 == 0:
        details["even_k_truncation"] = "zero on both sides"
    if length >= k + 1:
        witness = chain[:k + 1]
        lookup = dict(zip(pts.tolist(), vals.tolist()))
        assert is_violation(cube(d), lookup, witness, k)
        return Verdict(REJECT, f.queries - start, seed, witness, "violation among queried points",
                       details)
    return Verdict(ACCEPT, f.queries - start, seed, None, "no violation found", details)


test_cube_one_sided.__test__ = False
