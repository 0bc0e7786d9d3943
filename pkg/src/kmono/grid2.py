"""Adaptive tester for 2-monotonicity on the square grid [n]^2.

A point (i, j) has row i (coordinate 1) and column j (coordinate 2), so
``domain.view(table)[:, j]`` is column j read bottom to top. Every column is
padded virtually with a zero row below and above. Changepoints are kept in
padded 0-based rows: a band column has its ones strictly between l and h, and
a constant (all-zero) column gets (0, 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coarsening import BlockMap
from .errors import QueryBudgetExceeded
from .poset import ACCEPT, REJECT, Oracle, Verdict, grid, is_k_monotone, violation_chain

EMPTY = (0, -1)


@dataclass(frozen=True)
class ColumnChangepoints:
    lseq: np.ndarray
    hseq: np.ndarray

    def __post_init__(self):
        assert np.all(self.lseq <= self.hseq)


def extract_changepoints(column) -> tuple[int, int]:
    """(lseq, hseq) of one column, 1-indexed, straight from the definition.

    lseq = min{i : c(i) != c(1)} - 1 and hseq = max{i : c(i) != c(n)} + 1,
    with (1, 1) for a constant column.
    """
    c = np.asarray(column).reshape(-1)
    n = c.size
    if np.all(c == c[0]):
        return 1, 1
    lo = int(np.flatnonzero(c != c[0])[0]) + 1
    hi = int(np.flatnonzero(c != c[-1])[-1]) + 1
    return lo - 1, hi + 1


def padded_changepoints(table, n: int) -> ColumnChangepoints:
    """Changepoints of every column of a full table after zero padding."""
    v = grid(n, 2).view(table)
    ls, hs = [], []
    for j in range(n):
        col = np.concatenate(([0], v[:, j], [0]))
        a, b = extract_changepoints(col)
        ls.append(a - 1)
        hs.append(b - 1)
    return ColumnChangepoints(np.array(ls), np.array(hs))


def is_2_column_wise_monotone(table, n: int) -> bool:
    """Every padded column is a single band of ones."""
    v = grid(n, 2).view(table)
    for j in range(n):
        col = np.concatenate(([0], v[:, j], [0]))
        if int((np.diff(col) != 0).sum()) > 2:
            return False
    return True


def band_table(lseq, hseq, n: int) -> np.ndarray:
    """The 2-column-wise-monotone table with ones strictly between padded l and h."""
    rows = np.arange(1, n + 1)[:, None]
    v = (rows > np.asarray(lseq)[None, :]) & (rows < np.asarray(hseq)[None, :])
    return grid(n, 2).flat(v.astype(np.uint8))


# ---------------------------------------------------------------------------
# L1 isotonic regression


def isotonic_median_fit(y: np.ndarray) -> np.ndarray:
    """Isotonic median regression: pool adjacent violators, blocks valued by medians."""
    blocks: list[list[float]] = []
    meds: list[float] = []
    for v in y.tolist():
        blocks.append([v])
        meds.append(v)
        while len(blocks) > 1 and meds[-2] > meds[-1]:
            merged = sorted(blocks[-2] + blocks[-1])
            blocks[-2:] = [merged]
            meds[-2:] = [merged[(len(merged) - 1) // 2]]
    return np.concatenate([np.full(len(b), m) for b, m in zip(blocks, meds)]) if blocks else y


def l1_isotonic_exact(seq, direction: str = "nonincreasing") -> tuple[float, np.ndarray]:
    """Normalized L1 distance to the monotone cone and a closest sequence."""
    y = np.asarray(seq, dtype=float).reshape(-1)
    if y.size == 0:
        return 0.0, y
    if direction == "nonincreasing":
        fit = isotonic_median_fit(y[::-1])[::-1]
    elif direction == "nondecreasing":
        fit = isotonic_median_fit(y)
    else:
        raise ValueError("direction must be 'nonincreasing' or 'nondecreasing'")
    return float(np.abs(fit - y).sum() / y.size), fit


def l1_monotone_subtester(seq, n: int, eps_prime: float, delta: float = 1 / 6, seed=None,
                          rng=None, samples: int | None = None,
                          direction: str = "nonincreasing") -> Verdict:
    """Sample-based L1 monotonicity test for a [0, 1]-valued sequence on [n].

    Reads the sequence at s uniform positions, fits the sampled subsequence
    (in position order) exactly and rejects iff its L1 distance exceeds eps'/2.
    A subsequence of a monotone sequence is monotone, so monotone inputs are
    always accepted.
    """
    rng = rng if rng is not None else np.random.default_rng(seed)
    s = samples or math.ceil(4 * math.log(1 / delta) / eps_prime)
    pos = np.sort(rng.integers(0, n, s))
    vals = np.array([seq(int(p)) for p in pos], dtype=float)
    d, _ = l1_isotonic_exact(vals, direction)
    dec = REJECT if d > eps_prime / 2 else ACCEPT
    return Verdict(dec, s, seed, None, "sampled L1 fit", {"sampled_l1": d, "samples": s})


# ---------------------------------------------------------------------------
# coarsened column access


class _ColumnBlocks:
    """Endpoint coarsening of every column into K row blocks, read lazily.

    f is read through a memo so repeated block reads are free; exceeding
    ``cap`` reads raises QueryBudgetExceeded.
    """

    def __init__(self, f: Oracle, K: int, cap: float = math.inf):
        self.f = f
        self.n = f.domain.n
        self.K = K
        self.cap = cap
        bounds = BlockMap(self.n, 1, K).axis_bounds()
        self.lo = bounds[:-1]
        self.hi = bounds[1:] - 1
        self._memo: dict[int, int] = {}
        self.reads = 0

    def _f(self, i: int, j: int) -> int:
        idx = i + self.n * j
        v = self._memo.get(idx)
        if v is None:
            if self.reads >= self.cap:
                raise QueryBudgetExceeded(f"more than {self.cap:.0f} queries")
            v = self.f.query(idx)
            self._memo[idx] = v
            self.reads += 1
        return v

    def g(self, t: int, j: int) -> int:
        """Block t of column j: the common endpoint value, or 0 for a star."""
        a = self._f(int(self.lo[t]), j)
        if self.lo[t] == self.hi[t]:
            return a
        b = self._f(int(self.hi[t]), j)
        return a if a == b else 0

    def full_column(self, j: int) -> tuple[int, int]:
        """First and last 1-block of column j, or EMPTY."""
        ones = [t for t in range(self.K) if self.g(t, j)]
        return (ones[0], ones[-1]) if ones else EMPTY

    def padded(self, ab: tuple[int, int]) -> tuple[int, int]:
        """Padded (l, h) of the band covering blocks a..b."""
        a, b = ab
        if b < a:
            return 0, 0
        return int(self.lo[a]), int(self.hi[b]) + 2


def build_tilde_g(f: Oracle, eps: float) -> "TildeG":
    """The column-wise repair of the endpoint coarsening (stars read as 0)."""
    return TildeG(f, eps)


class TildeG:
    """g~: in each column, ones exactly between the first and last 1-block of g."""

    def __init__(self, f: Oracle, eps: float):
        n = f.domain.n
        self.n = n
        self.K = min(n, math.ceil(16 / eps))
        self.blocks = _ColumnBlocks(f, self.K)
        self._cols: dict[int, tuple[int, int]] = {}

    def changepoints(self, j: int) -> tuple[int, int]:
        if j not in self._cols:
            self._cols[j] = self.blocks.padded(self.blocks.full_column(j))
        return self._cols[j]

    def query(self, idx: int) -> int:
        i, j = idx % self.n, idx // self.n
        l, h = self.changepoints(j)
        return int(l < i + 1 < h)

    def table(self) -> np.ndarray:
        cp = [self.changepoints(j) for j in range(self.n)]
        return band_table([c[0] for c in cp], [c[1] for c in cp], self.n)


class RingG:
    """Lazily materialized column-wise-monotone proxy with amortized changepoint search.

    Anchor columns are fixed at construction and their bands are found by
    scans that only move downwards from the previous anchor. A column between
    two anchors searches for its first 1-block in [a_right, a_left] and its
    last 1-block in [b_right, b_left]. The result depends on f only.

    An empty column sits at the bottom, so scans after an empty anchor find
    nothing. RingG therefore equals g~ for 2-monotone f only when no empty
    column of g lies left of a non-empty one.
    """

    def __init__(self, f: Oracle, eps: float, cap: float = math.inf):
        n = f.domain.n
        self.n = n
        self.eps = eps
        self.K = min(n, math.ceil(16 / eps))
        self.blocks = _ColumnBlocks(f, self.K, cap)
        step = max(1, int(eps * n))
        self.anchors = sorted(set(list(range(0, n, step)) + [n - 1]))
        self._ab: dict[int, tuple[int, int]] = {}
        self.init_reads = 0
        self._initialize()

    def _initialize(self):
        B = self.blocks
        first = self.anchors[0]
        self._ab[first] = B.full_column(first)
        a_cur, b_cur = self._ab[first]
        for j in self.anchors[1:]:
            b_next = None
            for t in range(b_cur, -1, -1):
                if B.g(t, j):
                    b_next = t
                    break
            if b_next is None:
                self._ab[j] = EMPTY
                a_cur, b_cur = EMPTY
                continue
            a_next = 0
            for t in range(min(a_cur, b_next), -1, -1):
                if B.g(t, j) and (t == 0 or not B.g(t - 1, j)):
                    a_next = t
                    break
            self._ab[j] = (a_next, b_next)
            a_cur, b_cur = a_next, b_next
        self.init_reads = B.reads

    def blocks_of(self, j: int) -> tuple[int, int]:
        if j in self._ab:
            return self._ab[j]
        k = int(np.searchsorted(self.anchors, j, side="right")) - 1
        aL, bL = self._ab[self.anchors[k]]
        aR, bR = self._ab[self.anchors[k + 1]]
        B = self.blocks
        a = next((t for t in range(aR, aL + 1) if B.g(t, j)), None)
        b = next((t for t in range(bL, max(bR, 0) - 1, -1) if B.g(t, j)), None)
        if a is None and b is None:
            ab = EMPTY
        elif a is None:
            ab = (b, b)
        elif b is None:
            ab = (a, a)
        else:
            ab = (a, max(a, b))
        self._ab[j] = ab
        return ab

    def changepoints(self, j: int) -> tuple[int, int]:
        return self.blocks.padded(self.blocks_of(j))

    def lseq(self, j: int) -> float:
        return self.changepoints(j)[0] / (self.n + 1)

    def hseq(self, j: int) -> float:
        return self.changepoints(j)[1] / (self.n + 1)

    def _bracket(self, j: int) -> tuple[int, int]:
        """Smallest and largest block a band of column j can touch."""
        if j in self._ab:
            a, b = self._ab[j]
            return a, b
        k = int(np.searchsorted(self.anchors, j, side="right")) - 1
        aL, bL = self._ab[self.anchors[k]]
        aR, bR = self._ab[self.anchors[k + 1]]
        return min(aR, bR), max(aL, bL)

    def query(self, idx: int) -> int:
        i, j = idx % self.n, idx // self.n
        # the value is fixed by f; rows outside the bracket cost no reads
        lo, hi = self._bracket(j)
        beta = int(np.searchsorted(self.blocks.lo, i, side="right")) - 1
        if not lo <= beta <= hi:
            return 0
        l, h = self.changepoints(j)
        return int(l < i + 1 < h)

    def table(self) -> np.ndarray:
        cp = [self.changepoints(j) for j in range(self.n)]
        return band_table([c[0] for c in cp], [c[1] for c in cp], self.n)


def ring_g(f: Oracle, eps: float, cap: float = math.inf) -> RingG:
    return RingG(f, eps, cap)


@dataclass
class Grid2Params:
    l1_mult: float = 8.0
    dist_mult: float = 100.0
    cap_mult: float = 2000.0


def test_grid2_2monotone(f: Oracle, eps: float, seed=None,
                         params: Grid2Params | None = None) -> Verdict:
    """Two-sided adaptive tester for 2-monotonicity of f on [n]^2.

    Stage 1 runs the L1 subtester with parameter eps/64 on both changepoint
    sequences of RingG. Stage 2 estimates dist(f, RingG) from uniform points
    and rejects above 3eps/16, between eps/8 and eps/4. Crossing the hard cap
    of cap_mult/eps queries rejects.
    """
    p = params or Grid2Params()
    dom = f.domain
    if dom.d != 2:
        raise ValueError("test_grid2_2monotone needs a two-dimensional grid")
    n = dom.n
    start = f.queries
    if n < 16 / eps:
        table = f.read_all()
        ch = violation_chain(table, 2, dom)
        return Verdict(ACCEPT if ch is None else REJECT, f.queries - start, seed, ch, "full read")
    rng = np.random.default_rng(seed)
    cap = p.cap_mult / eps
    details = {}
    try:
        ring = RingG(f, eps, cap)
        details["init_queries"] = ring.init_reads
        s = math.ceil(p.l1_mult / eps)
        for name, seq in (("lseq", ring.lseq), ("hseq", ring.hseq)):
            v = l1_monotone_subtester(seq, n, eps / 64, rng=rng, samples=s)
            details[name + "_l1"] = v.details["sampled_l1"]
            if not v.accepted:
                return Verdict(REJECT, f.queries - start, seed, None,
                               f"{name} far from non-increasing", details)
        t = math.ceil(p.dist_mult / eps)
        pts = rng.integers(0, n * n, t)
        mism = 0
        for x in pts.tolist():
            mism += ring.blocks._f(x % n, x // n) != ring.query(x)
        details["mismatch"] = mism / t
        if mism / t > 3 * eps / 16:
            return Verdict(REJECT, f.queries - start, seed, None, "far from RingG", details)
    except QueryBudgetExceeded:
        return Verdict(REJECT, f.queries - start, seed, None, "query cap", details)
    return Verdict(ACCEPT, f.queries - start, seed, None, "", details)


test_grid2_2monotone.__test__ = False
