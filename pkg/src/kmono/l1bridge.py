"""L1 distance to monotonicity for [0,1]-valued functions, through Boolean thresholds.

A real function f on [n]^d is rounded up to the grid {0, 1/m, ..., 1} and
then stacked into a Boolean function on [n]^d x [m] whose layers are its
threshold sets. Monotone real functions become monotone Boolean ones, and the
L1 distance of the rounded function equals the Hamming distance of its lift,
so the Boolean tolerant testers decide the real question.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BudgetExceeded, PreconditionViolated
from .grid2 import isotonic_median_fit
from .highdim import param_ceil, pooled_median
from .poset import ACCEPT, REJECT, Domain, Verdict

ENUM_LIMIT = 22


# ---------------------------------------------------------------------------
# real-valued functions


def _fraction(v) -> Fraction:
    # floats go through their shortest decimal form, so 0.7 reads as 7/10
    if isinstance(v, float):
        return Fraction(repr(v))
    return Fraction(v)


@dataclass(frozen=True)
class RealFunction:
    """f(x) = num[x] / q on a grid domain, with 0 <= num <= q."""
    domain: Domain
    num: np.ndarray
    q: int

    def __post_init__(self):
        num = np.ascontiguousarray(self.num, dtype=np.int64).reshape(-1)
        if num.size != self.domain.size:
            raise ValueError(f"{num.size} values for a domain of {self.domain.size} points")
        if self.q < 1 or num.min(initial=0) < 0 or num.max(initial=0) > self.q:
            raise ValueError("values must lie in [0, 1]")
        num.setflags(write=False)
        object.__setattr__(self, "num", num)

    @classmethod
    def from_values(cls, domain: Domain, values, resolution: int | None = None) -> "RealFunction":
        fr = [_fraction(v) for v in values]
        q = resolution or math.lcm(1, *(v.denominator for v in fr))
        if any(q % v.denominator for v in fr):
            raise ValueError(f"resolution {q} does not cover every denominator")
        return cls(domain, np.array([int(v * q) for v in fr], dtype=np.int64), q)

    def value(self, idx: int) -> Fraction:
        return Fraction(int(self.num[idx]), self.q)

    def values(self) -> list[Fraction]:
        return [Fraction(int(a), self.q) for a in self.num]

    def floats(self) -> np.ndarray:
        return self.num / self.q

    def to_json(self) -> dict:
        return {"domain": self.domain.to_json(), "resolution": self.q,
                "values": [f"{v.numerator}/{v.denominator}" for v in self.values()]}

    @classmethod
    def from_json(cls, obj) -> "RealFunction":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls.from_values(Domain.from_json(obj["domain"]), obj["values"],
                               obj.get("resolution"))


class RealOracle:
    """Query-counted access to a RealFunction; reads return numerators over q."""

    def __init__(self, f: RealFunction):
        self.function = f
        self.domain = f.domain
        self.q = f.q
        self.queries = 0

    def many(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        self.queries += int(idx.size)
        return self.function.num[idx]

    def query(self, idx: int) -> Fraction:
        self.queries += 1
        return self.function.value(idx)


# ---------------------------------------------------------------------------
# threshold lift and rounding


def threshold_lift(value, t) -> int:
    """T(f)(x, t) = 1 if f(x) >= 1 - t, for one value f(x) and t in (0, 1]."""
    t = _fraction(t)
    if not 0 < t <= 1:
        raise ValueError("t must lie in (0, 1]")
    return int(_fraction(value) >= 1 - t)


def round_m(f: RealFunction, m: int) -> RealFunction:
    """Round every value up to the grid {0, 1/m, ..., 1}: ceil(m f(x)) / m."""
    if m < 1:
        raise ValueError("m must be at least 1")
    return RealFunction(f.domain, -(-m * f.num // f.q), m)


def lift_shape(domain: Domain, m: int) -> tuple:
    return (domain.n,) * domain.d + (m,)


def lift_table(f: RealFunction, m: int) -> np.ndarray:
    """Threshold layers of f on [n]^d x [m]; the layer axis is last.

    Layer i (t = (i+1)/m) holds 1{f(x) > 1 - t}. For values in {0, 1/m, ..., 1}
    this is T(f)(x, t - 1/m), and a value j/m is 1 on exactly j layers, so the
    layers average back to f.
    """
    i = np.arange(1, m + 1, dtype=np.int64)
    # f > 1 - i/m  <=>  m num > (m - i) q
    bits = (m * f.num[None, :] > (m - i)[:, None] * f.q).astype(np.uint8)
    return bits.reshape(-1)


def unlift(table, domain: Domain, m: int) -> RealFunction:
    """Inverse of lift_table on monotone lifts: count the 1-layers at each x."""
    t = np.asarray(table).reshape(m, domain.size)
    return RealFunction(domain, t.sum(axis=0), m)


# ---------------------------------------------------------------------------
# monotone labelings of a rectangle


def rect_is_monotone(table, shape) -> bool:
    v = np.asarray(table).reshape(shape, order="F")
    return all(np.all(np.diff(v.astype(np.int8), axis=a) >= 0) for a in range(len(shape)))


def monotone_rect_tables(shape):
    """Every monotone 0/1 table on the rectangle, by filling points in index order."""
    N = math.prod(shape)
    if N > ENUM_LIMIT:
        raise BudgetExceeded(f"{N} points exceed the enumeration limit {ENUM_LIMIT}")
    strides = np.cumprod((1,) + tuple(shape[:-1]))
    coords = np.stack(np.unravel_index(np.arange(N), shape, order="F"), axis=1)
    preds = [[x - strides[a] for a in range(len(shape)) if coords[x, a] > 0] for x in range(N)]
    t = np.zeros(N, dtype=np.uint8)

    def fill(x):
        if x == N:
            yield t.copy()
            return
        forced = any(t[p] for p in preds[x])
        for b in ((1,) if forced else (0, 1)):
            t[x] = b
            yield from fill(x + 1)
        t[x] = 0

    yield from fill(0)


def best_monotone_labeling(cost0, cost1, shape) -> tuple[float, np.ndarray]:
    """Cheapest monotone labeling of a rectangle given per-point costs of 0 and 1.

    Two axes: each column along the last axis is an up-set {b >= c(a)}, and
    monotonicity along the first axis means c is non-increasing, so a DP over
    columns with suffix minima solves it. One axis is the special case of a
    single threshold. Other shapes enumerate when small.
    """
    shape = tuple(shape)
    c0 = np.asarray(cost0, dtype=float).reshape(shape, order="F")
    c1 = np.asarray(cost1, dtype=float).reshape(shape, order="F")
    if len(shape) == 1:
        c0, c1, shape = c0[None, :], c1[None, :], (1,) + shape
    if len(shape) == 2:
        A, B = shape
        # cost of column a with threshold c: zeros below c, ones from c on
        z = np.concatenate([np.zeros((A, 1)), np.cumsum(c0, axis=1)], axis=1)
        o = np.concatenate([np.cumsum(c1[:, ::-1], axis=1)[:, ::-1], np.zeros((A, 1))], axis=1)
        col = z + o
        best = col[0].copy()
        choice = np.zeros((A, B + 1), dtype=np.int64)
        choice[0] = np.arange(B + 1)
        for a in range(1, A):
            # suffix minimum over c' >= c of the previous column
            sm = np.minimum.accumulate(best[::-1])[::-1]
            arg = np.empty(B + 1, dtype=np.int64)
            cur = B
            for c in range(B, -1, -1):
                if best[c] <= best[cur]:
                    cur = c
                arg[c] = cur
            choice[a] = arg
            best = col[a] + sm
        c = int(np.argmin(best))
        total = float(best[c])
        labels = np.zeros((A, B), dtype=np.uint8)
        for a in range(A - 1, -1, -1):
            labels[a, c:] = 1
            if a:
                c = int(choice[a][c])
        return total, labels.reshape(-1, order="F")
    flat0, flat1 = c0.reshape(-1, order="F"), c1.reshape(-1, order="F")
    best_cost, best_t = math.inf, None
    for t in monotone_rect_tables(shape):
        cost = float(np.where(t == 1, flat1, flat0).sum())
        if cost < best_cost:
            best_cost, best_t = cost, t
    return best_cost, best_t


def hamming_distance_monotone_rect(table, shape) -> Fraction:
    t = np.asarray(table).reshape(-1)
    cost, _ = best_monotone_labeling(t == 1, t == 0, shape)
    return Fraction(round(cost), t.size)


# ---------------------------------------------------------------------------
# exact L1 distances


def l1_distance_monotone(f: RealFunction) -> Fraction:
    """Exact L1 distance from f to the monotone (non-decreasing) functions into [0, 1].

    The line uses isotonic median regression on exact fractions. Other
    domains go through the lift: an L1-optimal fit can take its values among
    f's own values, so rounding to the grid of f's resolution loses nothing.
    """
    dom = f.domain
    if dom.d == 1:
        y = np.array(f.values(), dtype=object)
        fit = isotonic_median_fit(y)
        return sum((abs(a - b) for a, b in zip(fit, y)), Fraction(0)) / dom.size
    return hamming_distance_monotone_rect(lift_table(f, f.q), lift_shape(dom, f.q))


def l1_equals_hamming_check(f: RealFunction, m: int | None = None) -> bool:
    """Check L1(f, monotone) = Hamming(lift of f, monotone) for a grid-valued f.

    The real side is isotonic regression on the line, or an enumeration of
    monotone grid-valued functions elsewhere; the Boolean side enumerates or
    solves the rectangle directly. Both are exact.
    """
    m = f.q if m is None else m
    if np.any((f.num * m) % f.q):
        raise PreconditionViolated("f must take values in {0, 1/m, ..., 1}")
    g = RealFunction(f.domain, f.num * m // f.q, m)
    shape = lift_shape(g.domain, m)
    if math.prod(shape) > ENUM_LIMIT and g.domain.d > 1:
        raise BudgetExceeded("instance too large for the exact check")
    boolean = hamming_distance_monotone_rect(lift_table(g, m), shape)
    if g.domain.d == 1:
        real = l1_distance_monotone(g)
    else:
        real = _l1_distance_by_enumeration(g)
    return real == boolean


def _l1_distance_by_enumeration(g: RealFunction) -> Fraction:
    """Minimum over monotone h with values in {0, 1/q, ..., 1} of L1(g, h)."""
    dom = g.domain
    N = dom.size
    if (g.q + 1) ** N > 1 << 20:
        raise BudgetExceeded("too many candidate functions")
    coords = dom.coords()
    preds = [[y for y in range(N) if y != x and np.all(coords[y] <= coords[x])]
             for x in range(N)]
    best = math.inf
    for h in itertools.product(range(g.q + 1), repeat=N):
        if all(h[y] <= h[x] for x in range(N) for y in preds[x]):
            best = min(best, int(np.abs(np.array(h) - g.num).sum()))
    return Fraction(best, N * g.q)


# ---------------------------------------------------------------------------
# tolerant L1 tester


class _RectBlocks:
    """Axis-aligned blocks of a rectangle; coordinate y of an axis of length L
    with c blocks lies in block floor(y c / L)."""

    def __init__(self, shape, counts):
        self.shape = tuple(shape)
        self.counts = tuple(counts)
        self.bounds = [-(-np.arange(c + 1) * L // c) for L, c in zip(self.shape, self.counts)]
        self.strides = np.cumprod((1,) + self.shape[:-1])
        self.size = math.prod(self.counts)

    def block_coords(self, blocks):
        return np.unravel_index(np.asarray(blocks), self.counts, order="F")

    def sample(self, blocks, rng) -> np.ndarray:
        idx = np.zeros(np.size(blocks), dtype=np.int64)
        for a, b in enumerate(self.block_coords(blocks)):
            lo, hi = self.bounds[a][b], self.bounds[a][b + 1]
            idx += (lo + (rng.random(idx.size) * (hi - lo)).astype(np.int64)) * self.strides[a]
        return idx

    def weights(self) -> np.ndarray:
        per_axis = [np.diff(bd) / L for bd, L in zip(self.bounds, self.shape)]
        w = per_axis[0]
        for p in per_axis[1:]:
            w = np.multiply.outer(w, p)
        return np.asarray(w).reshape(-1, order="F") if len(per_axis) > 1 else w


class LiftedOracle:
    """Boolean access to the lift of the m-rounding of f on [n]^d x [m].

    Point index x + N i addresses layer i at x; each read costs one read of f.
    """

    def __init__(self, f: RealOracle, m: int):
        self.f = f
        self.m = m
        self.N = f.domain.size
        self.shape = lift_shape(f.domain, m)

    @property
    def queries(self) -> int:
        return self.f.queries

    def many(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        x, i = idx % self.N, idx // self.N + 1
        j = -(-self.m * self.f.many(x) // self.f.q)
        return (j > self.m - i).astype(np.uint8)


def l1_test_params(eps1: float, eps2: float) -> dict:
    m = param_ceil(4 / (eps2 - eps1))
    return {"m": m, "eps1": eps1 + 1 / m, "eps2": eps2 - 1 / m}


def tolerant_l1_test_monotone(f: RealOracle, eps1: float, eps2: float, seed=None,
                              engine: str = "full") -> Verdict:
    """Tolerant L1 tester for monotonicity of f: [n]^d -> [0, 1].

    The lift of the m-rounding of f is tested for Boolean monotonicity with
    thresholds eps1 + 1/m and eps2 - 1/m on [n]^d x [m]. ``engine='full'``
    estimates block label frequencies and searches monotone block functions;
    ``engine='agnostic'`` fits the block labels by L1 regression and checks
    the hypothesis distance.
    """
    if engine not in ("full", "agnostic"):
        raise ValueError("engine must be 'full' or 'agnostic'")
    if not 0 <= eps1 < eps2 <= 1:
        raise PreconditionViolated("need 0 <= eps1 < eps2 <= 1")
    p = l1_test_params(eps1, eps2)
    m, e1, e2 = p["m"], p["eps1"], p["eps2"]
    g = LiftedOracle(f, m)
    dprime = f.domain.d + 1
    rng = np.random.default_rng(seed)
    start = f.queries
    if engine == "full":
        alpha = e2 - e1
        M = param_ceil(5 * dprime / alpha)
    else:
        if not e2 > 3 * e1:
            raise PreconditionViolated(
                f"the lifted thresholds {e1:.4f}, {e2:.4f} need eps2 > 3 eps1")
        alpha = e2 - 3 * e1
        M = param_ceil(6 * dprime / alpha)
    counts = tuple(min(M, L) for L in g.shape)
    blocks = _RectBlocks(g.shape, counts)
    B = blocks.size
    if len(counts) > 2 and B > ENUM_LIMIT:
        raise BudgetExceeded(f"{B} blocks exceed the search limit {ENUM_LIMIT}")
    w = blocks.weights()
    details = dict(p, engine=engine, alpha=alpha, blocks=counts)
    if engine == "full":
        t = param_ceil(25 * math.log(6 * B) / (2 * alpha ** 2))
        ids = np.repeat(np.arange(B), t)
        p1 = g.many(blocks.sample(ids, rng)).reshape(B, t).mean(axis=1)
        err, _ = best_monotone_labeling((p1 * w), ((1 - p1) * w), counts)
        threshold = e1 + alpha / 2
        details.update(t=t, best_error=err, threshold=threshold)
        dec = ACCEPT if err <= threshold else REJECT
        return Verdict(dec, f.queries - start, seed, None, "block search", details)

    t = param_ceil(3 * dprime * 2 / alpha * math.log(M) + math.log(100))
    est = param_ceil(math.log(20) / (2 * (alpha / 7) ** 2))

    def draw(s):
        b = rng.integers(0, B, s)
        return b, g.many(blocks.sample(b, rng)).astype(np.int64)

    xb, yb = draw(B * t)
    # the degree bound exceeds the dimension, so the L1 fit is the per-block median
    h = (pooled_median(xb, yb, B) >= 0.5).astype(np.uint8)
    xe, ye = draw(est)
    err = float((h[xe] != ye).mean())
    details.update(t=t, estimate=err)
    if err > e1 + 5 * alpha / 12:
        return Verdict(REJECT, f.queries - start, seed, None, "hypothesis error too large",
                       details)
    dist, _ = best_monotone_labeling(w * (h == 1), w * (h == 0), counts)
    details["hypothesis_distance"] = dist
    dec = ACCEPT if dist <= 2 * e1 + 5 * alpha / 12 else REJECT
    return Verdict(dec, f.queries - start, seed, None, "hypothesis distance", details)
