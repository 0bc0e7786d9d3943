"""Grid posets, query-counted oracles and exact k-monotonicity oracles.

Points of ``[n]^d`` are stored as integers in mixed radix with coordinate 1
least significant, so increasing index order is a linear extension of the
product order. Coordinates are 0-based internally.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetExceeded, PreconditionViolated

FULL_READ_LIMIT = 1 << 24
BRUTE_FORCE_LIMIT = 24
MATCHING_LIMIT = 12

ACCEPT = "ACCEPT"
REJECT = "REJECT"


@dataclass(frozen=True)
class Domain:
    kind: str
    n: int
    d: int

    def __post_init__(self):
        if self.kind not in ("line", "grid", "cube"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be positive")
        if self.kind == "line" and self.d != 1:
            raise ValueError("a line has d = 1")
        if self.kind == "cube" and self.n != 2:
            raise ValueError("a cube has n = 2")

    @property
    def size(self) -> int:
        return self.n ** self.d

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.d

    def strides(self) -> np.ndarray:
        return self.n ** np.arange(self.d, dtype=np.int64)

    def encode(self, coords: Sequence[int]) -> int:
        idx = 0
        for c in reversed(tuple(coords)):
            if not 0 <= c < self.n:
                raise ValueError(f"coordinate {c} out of range")
            idx = idx * self.n + int(c)
        return idx

    def decode(self, idx: int) -> tuple:
        if not 0 <= idx < self.size:
            raise ValueError(f"index {idx} out of range")
        out = []
        for _ in range(self.d):
            idx, r = divmod(idx, self.n)
            out.append(r)
        return tuple(out)

    def coords(self) -> np.ndarray:
        """All points as an ``(N, d)`` coordinate array in index order."""
        return _coords(self.n, self.d)

    def leq(self, a: int, b: int) -> bool:
        return all(x <= y for x, y in zip(self.decode(a), self.decode(b)))

    def lt(self, a: int, b: int) -> bool:
        return a != b and self.leq(a, b)

    def view(self, table) -> np.ndarray:
        """Reshape a flat table so that ``view[x1, ..., xd]`` is the value at x."""
        return np.asarray(table).reshape(self.shape, order="F")

    def flat(self, arr) -> np.ndarray:
        return np.asarray(arr).reshape(-1, order="F")

    def to_json(self) -> dict:
        return {"kind": self.kind, "n": self.n, "d": self.d}

    @staticmethod
    def from_json(obj: dict) -> "Domain":
        kind = obj["kind"]
        if kind == "cube":
            return Domain("cube", 2, int(obj["d"]))
        if kind == "line":
            return Domain("line", int(obj["n"]), 1)
        if kind != "grid":
            raise ValueError(f"unknown domain kind {kind!r}")
        return grid(int(obj["n"]), int(obj.get("d", 1)))


def line(n: int) -> Domain:
    return Domain("line", n, 1)


def grid(n: int, d: int) -> Domain:
    return Domain("line", n, 1) if d == 1 else Domain("grid", n, d)


def cube(d: int) -> Domain:
    return Domain("cube", 2, d)


@lru_cache(maxsize=64)
def _coords(n: int, d: int) -> np.ndarray:
    idx = np.arange(n ** d, dtype=np.int64)
    out = np.empty((n ** d, d), dtype=np.int64)
    for i in range(d):
        idx, out[:, i] = np.divmod(idx, n)
    out.setflags(write=False)
    return out


class Oracle:
    """Query-counted read access to a function on a finite grid poset.

    The truth table is immutable; every call to :meth:`query` or :meth:`many`
    adds the number of points read to ``queries``.
    """

    def __init__(self, domain: Domain, table, source: dict | None = None):
        arr = np.ascontiguousarray(table, dtype=np.uint8).reshape(-1)
        if arr.size != domain.size:
            raise ValueError(f"table has {arr.size} entries, domain has {domain.size}")
        arr.setflags(write=False)
        self.domain = domain
        self._table = arr
        self.source = source
        self.queries = 0

    def query(self, idx: int) -> int:
        self.queries += 1
        return int(self._table[idx])

    __call__ = query

    def many(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        self.queries += int(idx.size)
        return self._table[idx]

    def at(self, coords: Sequence[int]) -> int:
        return self.query(self.domain.encode(coords))

    def read_all(self) -> np.ndarray:
        self.queries += self.domain.size
        return self._table

    @property
    def truth(self) -> np.ndarray:
        """The backing table, without touching the query counter."""
        return self._table

    def fresh(self) -> "Oracle":
        return Oracle(self.domain, self._table, self.source)


@dataclass
class Verdict:
    decision: str
    queries: int
    seed: int | None = None
    witness: tuple | None = None
    reason: str = ""
    details: dict = field(default_factory=dict)

    @property
    def accepted(self) -> bool:
        return self.decision == ACCEPT

    def to_json(self) -> dict:
        out = {"decision": self.decision, "queries": self.queries, "seed": self.seed,
               "reason": self.reason}
        if self.witness is not None:
            out["witness"] = [int(x) for x in self.witness]
        if self.details:
            out["details"] = self.details
        return out


@dataclass(frozen=True)
class DistanceValue:
    """An exact distance, or a certified lower bound backed by a matching."""

    value: Fraction
    lower_bound: bool = False
    matching: tuple = ()

    def __float__(self):
        return float(self.value)

    def to_json(self) -> dict:
        out = {"value": f"{self.value.numerator}/{self.value.denominator}",
               "float": float(self.value), "lower_bound": self.lower_bound}
        if self.matching:
            out["matching"] = [list(map(int, e)) for e in self.matching]
        return out


def _table_of(f, domain: Domain | None = None) -> tuple[Domain, np.ndarray]:
    if isinstance(f, Oracle):
        return f.domain, f.truth
    if domain is None:
        arr = np.asarray(f, dtype=np.uint8).reshape(-1)
        return line(arr.size), arr
    return domain, np.asarray(f, dtype=np.uint8).reshape(-1)


def _guard(domain: Domain, limit: int):
    if domain.size > limit:
        raise BudgetExceeded(f"domain of {domain.size} points exceeds the limit {limit}")


# ---------------------------------------------------------------------------
# alternating-chain dynamic programming


@lru_cache(maxsize=32)
def _levels(n: int, d: int) -> tuple:
    """Points grouped by coordinate sum, with immediate predecessor and successor indices.

    Missing neighbours point at the sentinel index ``N``.
    """
    N = n ** d
    co = _coords(n, d)
    lev = co.sum(axis=1)
    strides = n ** np.arange(d, dtype=np.int64)
    order = np.argsort(lev, kind="stable")
    bounds = np.searchsorted(lev[order], np.arange(lev.max() + 2))
    out = []
    for s in range(len(bounds) - 1):
        idx = order[bounds[s]:bounds[s + 1]]
        c = co[idx]
        pred = np.where(c > 0, idx[:, None] - strides[None, :], N)
        succ = np.where(c < n - 1, idx[:, None] + strides[None, :], N)
        out.append((idx, pred, succ))
    return tuple(out)


def _profiles(domain: Domain, table: np.ndarray):
    """Per-point chain data.

    ``A[x]`` is the length of the longest alternating chain that starts with a 1
    and ends at x (0 if none). ``P[b][x]`` is the max of ``A`` over y <= x with
    f(y) = b. Arrays carry a trailing sentinel slot.
    """
    N = domain.size
    f = np.asarray(table, dtype=np.int64)
    A = np.zeros(N + 1, dtype=np.int64)
    P0 = np.zeros(N + 1, dtype=np.int64)
    P1 = np.zeros(N + 1, dtype=np.int64)
    for idx, pred, _ in _levels(domain.n, domain.d):
        m0 = P0[pred].max(axis=1)
        m1 = P1[pred].max(axis=1)
        fv = f[idx]
        a = np.where(fv == 1, 1 + m0, np.where(m1 > 0, 1 + m1, 0))
        A[idx] = a
        P0[idx] = np.where(fv == 0, np.maximum(m0, a), m0)
        P1[idx] = np.where(fv == 1, np.maximum(m1, a), m1)
    return A, P0, P1


def _line_runs(table: np.ndarray):
    """Run starts and run values of a 0/1 sequence."""
    t = np.asarray(table, dtype=np.int8)
    if t.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int8)
    starts = np.concatenate(([0], np.flatnonzero(np.diff(t)) + 1))
    return starts, t[starts]


def longest_alternating_chain(f, domain: Domain | None = None) -> int:
    """Length of the longest chain whose values alternate and start with 1."""
    domain, table = _table_of(f, domain)
    _guard(domain, FULL_READ_LIMIT)
    if domain.d == 1:
        starts, vals = _line_runs(table)
        ones = np.flatnonzero(vals == 1)
        return 0 if ones.size == 0 else int(vals.size - ones[0])
    A, _, _ = _profiles(domain, table)
    return int(A[:-1].max(initial=0))


def _up_closure(mask: np.ndarray) -> np.ndarray:
    for ax in range(mask.ndim):
        mask = np.logical_or.accumulate(mask, axis=ax)
    return mask


def is_k_monotone(f, k: int, domain: Domain | None = None) -> bool:
    """True iff no chain x1 < ... < x_{k+1} has f(x1) = 1 and alternating values."""
    if k < 1:
        raise ValueError("k must be at least 1")
    domain, table = _table_of(f, domain)
    _guard(domain, FULL_READ_LIMIT)
    if domain.d == 1 or k >= domain.size:
        return longest_alternating_chain(table, domain) <= k
    # S_j holds the ends of alternating chains of length j; S_{j+1} is the part
    # of the up-closure of S_j carrying the opposite value
    v = domain.view(table != 0)
    ends = v
    for j in range(1, k + 1):
        ends = _up_closure(ends) & (v if j % 2 == 0 else ~v)
        if not ends.any():
            return True
    return False


def violation_chain(f, k: int, domain: Domain | None = None) -> tuple | None:
    """A violating (k+1)-chain of point indices, or None if f is k-monotone."""
    domain, table = _table_of(f, domain)
    _guard(domain, FULL_READ_LIMIT)
    if domain.d == 1:
        starts, vals = _line_runs(table)
        ones = np.flatnonzero(vals == 1)
        if ones.size == 0 or vals.size - ones[0] < k + 1:
            return None
        return tuple(int(s) for s in starts[ones[0]:ones[0] + k + 1])
    A, P0, P1 = _profiles(domain, table)
    hits = np.flatnonzero(A[:-1] >= k + 1)
    if hits.size == 0:
        return None
    N = domain.size
    levels = _levels(domain.n, domain.d)
    pred_of = np.full((N + 1, domain.d), N, dtype=np.int64)
    for idx, pred, _ in levels:
        pred_of[idx] = pred
    P = (P0, P1)
    x = int(hits[0])
    chain = [x]
    while A[x] > 1:
        need, b = A[x] - 1, 1 - int(table[x])
        z = x
        while True:
            if z != x and table[z] == b and A[z] >= need:
                break
            z = next(int(p) for p in pred_of[z] if p < N and P[b][p] >= need)
        chain.append(z)
        x = z
    chain.reverse()
    return tuple(chain[:k + 1])


def is_violation(domain: Domain, values, chain: Sequence[int], k: int) -> bool:
    """Check that ``chain`` is a strict chain of k+1 points carrying the pattern 1,0,1,..."""
    if len(chain) != k + 1:
        return False
    vals = [int(values[x]) if not isinstance(values, dict) else int(values[x]) for x in chain]
    if any(vals[i] != (1 - i % 2) for i in range(k + 1)):
        return False
    return all(domain.lt(chain[i], chain[i + 1]) for i in range(k))


# ---------------------------------------------------------------------------
# exact distances


def min_cost_k_monotone_line(cost0, cost1, k: int):
    """Cheapest k-monotone labelling of a sequence under per-position costs.

    ``cost_b[i]`` is the price of giving position i the value b. State c counts
    runs since the first 1 (c = 0 before any 1), so the value in state c is
    ``c % 2``. Skipping states corresponds to empty runs.
    Returns ``(total cost, labels)``.
    """
    c0 = np.asarray(cost0)
    c1 = np.asarray(cost1)
    L = c0.size
    state_val = np.arange(k + 1) % 2
    D = np.zeros(k + 1, dtype=np.result_type(c0, c1, np.int64))
    back = np.zeros((L, k + 1), dtype=np.int64)
    for i in range(L):
        pm = np.minimum.accumulate(D)
        arg = np.zeros(k + 1, dtype=np.int64)
        for c in range(1, k + 1):
            arg[c] = c if D[c] <= pm[c - 1] else arg[c - 1]
        back[i] = arg
        D = pm + np.where(state_val == 1, c1[i], c0[i])
    c = int(np.argmin(D))
    total = D[c]
    labels = np.zeros(L, dtype=np.uint8)
    for i in range(L - 1, -1, -1):
        labels[i] = state_val[c]
        c = int(back[i][c])
    return total, labels


def exact_distance_line_dp(f, k: int, domain: Domain | None = None) -> DistanceValue:
    """Exact normalized distance to k-monotone on a line, via a run-compressed DP."""
    domain, table = _table_of(f, domain)
    if domain.d != 1:
        raise PreconditionViolated("exact_distance_line_dp needs a line domain")
    starts, vals = _line_runs(table)
    lengths = np.diff(np.append(starts, table.size))
    cost0 = np.where(vals == 1, lengths, 0)
    cost1 = np.where(vals == 0, lengths, 0)
    total, _ = min_cost_k_monotone_line(cost0, cost1, k)
    return DistanceValue(Fraction(int(total), domain.size))


def closest_k_monotone_line(f, k: int, domain: Domain | None = None) -> np.ndarray:
    """A nearest k-monotone table on a line."""
    domain, table = _table_of(f, domain)
    t = np.asarray(table, dtype=np.int64)
    _, labels = min_cost_k_monotone_line(t, 1 - t, k)
    return labels


def _alternation_lengths(domain: Domain, masks: np.ndarray) -> np.ndarray:
    """Longest alternating chain for a batch of bit-packed tables."""
    N = domain.size
    co = domain.coords()
    strides = domain.strides()
    B = masks.size
    A = np.zeros((N, B), dtype=np.int8)
    P0 = np.zeros((N, B), dtype=np.int8)
    P1 = np.zeros((N, B), dtype=np.int8)
    best = np.zeros(B, dtype=np.int8)
    for x in range(N):
        bit = ((masks >> np.uint64(x)) & np.uint64(1)).astype(np.int8)
        m0 = np.zeros(B, dtype=np.int8)
        m1 = np.zeros(B, dtype=np.int8)
        for i in range(domain.d):
            if co[x, i] > 0:
                p = x - int(strides[i])
                np.maximum(m0, P0[p], out=m0)
                np.maximum(m1, P1[p], out=m1)
        a = np.where(bit == 1, 1 + m0, np.where(m1 > 0, 1 + m1, 0)).astype(np.int8)
        A[x] = a
        P0[x] = np.where(bit == 0, np.maximum(m0, a), m0)
        P1[x] = np.where(bit == 1, np.maximum(m1, a), m1)
        np.maximum(best, a, out=best)
    return best


@lru_cache(maxsize=64)
def k_monotone_masks(domain: Domain, k: int) -> np.ndarray:
    """Every k-monotone table on a small domain, bit-packed (bit x = value at x)."""
    _guard(domain, BRUTE_FORCE_LIMIT)
    N = domain.size
    chunk = 1 << 20
    keep = []
    for start in range(0, 1 << N, chunk):
        masks = np.arange(start, min(start + chunk, 1 << N), dtype=np.uint64)
        keep.append(masks[_alternation_lengths(domain, masks) <= k])
    out = np.concatenate(keep)
    out.setflags(write=False)
    return out


def pack(table) -> int:
    t = np.asarray(table, dtype=np.uint8).reshape(-1)
    return int(sum(1 << i for i in np.flatnonzero(t)))


def unpack(mask: int, size: int) -> np.ndarray:
    return np.array([(mask >> i) & 1 for i in range(size)], dtype=np.uint8)


def exact_distance_bruteforce(f, k: int, domain: Domain | None = None) -> DistanceValue:
    """Exact distance by enumerating every flip set.

    Each flip set F corresponds to the table f XOR F, so the minimum over flip
    sets yielding a k-monotone table is the minimum Hamming distance from f to
    the enumerated k-monotone tables.
    """
    domain, table = _table_of(f, domain)
    _guard(domain, BRUTE_FORCE_LIMIT)
    masks = k_monotone_masks(domain, k)
    fm = np.uint64(pack(table))
    best = int(np.bitwise_count(masks ^ fm).min())
    return DistanceValue(Fraction(best, domain.size))


def closest_k_monotone_bruteforce(f, k: int, domain: Domain | None = None) -> np.ndarray:
    domain, table = _table_of(f, domain)
    masks = k_monotone_masks(domain, k)
    fm = np.uint64(pack(table))
    m = int(masks[int(np.argmin(np.bitwise_count(masks ^ fm)))])
    return unpack(m, domain.size)


def exact_distance_monotone(f, domain: Domain | None = None) -> DistanceValue:
    """Exact distance to monotone (k = 1) on any grid.

    Violations of monotonicity are pairs (1 below 0), so the violation
    hypergraph is bipartite and a maximum matching has the size of a minimum
    vertex cover.
    """
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import maximum_bipartite_matching

    domain, table = _table_of(f, domain)
    _guard(domain, FULL_READ_LIMIT)
    ones = np.flatnonzero(table == 1)
    zeros = np.flatnonzero(table == 0)
    if ones.size == 0 or zeros.size == 0:
        return DistanceValue(Fraction(0, domain.size))
    co = domain.coords()
    rows, cols = [], []
    zc = co[zeros]
    for r, x in enumerate(ones):
        hit = np.flatnonzero(np.all(zc >= co[x], axis=1))
        rows.append(np.full(hit.size, r))
        cols.append(hit)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    if rows.size == 0:
        return DistanceValue(Fraction(0, domain.size))
    g = csr_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)),
                   shape=(ones.size, zeros.size))
    match = maximum_bipartite_matching(g, perm_type="column")
    return DistanceValue(Fraction(int((match >= 0).sum()), domain.size))


MILP_LIMIT = 4096


def exact_distance_milp(f, k: int, domain: Domain | None = None) -> DistanceValue:
    """Exact distance through an integer program over nested up-sets.

    A table is k-monotone iff it equals the parity of how many of k nested
    up-sets U_1 >= ... >= U_k contain each point. With 0/1 indicators u_i the
    candidate is g = u_1 - u_2 + u_3 - ..., which keeps g in {0, 1}, and the
    Hamming distance to f is linear in the u_i.
    """
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import coo_matrix, vstack

    domain, table = _table_of(f, domain)
    _guard(domain, MILP_LIMIT)
    N = domain.size
    sign = np.array([1 if i % 2 == 0 else -1 for i in range(k)])
    # |f - g| = g where f = 0 and 1 - g where f = 1
    w = np.where(table == 1, -1, 1)
    c = np.concatenate([w * s for s in sign])
    const = int(table.sum())
    blocks = []
    idx = np.arange(N)
    # covering relations x < x + e_t: u_i(x) <= u_i(x + e_t)
    for t in range(domain.d):
        step = int(domain.strides()[t])
        lo = idx[(idx // step) % domain.n < domain.n - 1]
        for i in range(k):
            r = np.arange(lo.size)
            blocks.append(coo_matrix(
                (np.r_[np.ones(lo.size), -np.ones(lo.size)],
                 (np.r_[r, r], np.r_[i * N + lo, i * N + lo + step])), shape=(lo.size, k * N)))
    # nesting: u_{i+1} <= u_i
    for i in range(k - 1):
        r = np.arange(N)
        blocks.append(coo_matrix(
            (np.r_[np.ones(N), -np.ones(N)], (np.r_[r, r], np.r_[(i + 1) * N + idx, i * N + idx])),
            shape=(N, k * N)))
    cons = []
    if blocks:
        A = vstack(blocks).tocsr()
        cons = [LinearConstraint(A, -np.inf, 0)]
    res = milp(c, constraints=cons, integrality=np.ones(k * N), bounds=Bounds(0, 1))
    if not res.success:
        raise BudgetExceeded(f"integer program failed: {res.message}")
    return DistanceValue(Fraction(int(round(res.fun)) + const, N))


def exact_distance(f, k: int, domain: Domain | None = None) -> DistanceValue:
    """Dispatch to an exact engine that fits the domain."""
    domain, table = _table_of(f, domain)
    if domain.d == 1:
        return exact_distance_line_dp(table, k, domain)
    if domain.size <= BRUTE_FORCE_LIMIT:
        return exact_distance_bruteforce(table, k, domain)
    if k == 1:
        return exact_distance_monotone(table, domain)
    if domain.size <= MILP_LIMIT:
        return exact_distance_milp(table, k, domain)
    raise BudgetExceeded("no exact engine for this domain size and k")


# ---------------------------------------------------------------------------
# violation hypergraph and matchings


def violation_hyperedges(f, k: int, domain: Domain | None = None) -> list:
    """Every violating (k+1)-chain, as sorted index tuples."""
    domain, table = _table_of(f, domain)
    _guard(domain, FULL_READ_LIMIT)
    N = domain.size
    co = domain.coords()
    above = [[y for y in range(x + 1, N) if np.all(co[y] >= co[x])] for x in range(N)]
    out = []

    def extend(chain):
        if len(chain) == k + 1:
            out.append(tuple(chain))
            return
        want = 1 - int(table[chain[-1]])
        for y in above[chain[-1]]:
            if table[y] == want:
                chain.append(y)
                extend(chain)
                chain.pop()

    for x in range(N):
        if table[x] == 1:
            extend([x])
    return out


def max_violation_matching_exact(f, k: int, domain: Domain | None = None) -> int:
    """Size of a maximum set of pairwise disjoint violating (k+1)-chains."""
    domain, table = _table_of(f, domain)
    _guard(domain, MATCHING_LIMIT)
    edges = [sum(1 << x for x in e) for e in violation_hyperedges(table, k, domain)]
    by_vertex: dict[int, list] = {}
    for e in edges:
        low = (e & -e).bit_length() - 1
        by_vertex.setdefault(low, []).append(e)

    @lru_cache(maxsize=None)
    def best(used: int, start: int) -> int:
        for v in range(start, domain.size):
            if used >> v & 1 or v not in by_vertex:
                continue
            top = best(used | 1 << v, v + 1)
            for e in by_vertex[v]:
                if not e & used:
                    top = max(top, 1 + best(used | e, v + 1))
            return top
        return 0

    return best(0, 0)


def min_vertex_cover_bruteforce(edges: Iterable[tuple], size: int) -> int:
    """Minimum vertex cover of a small hypergraph by subset enumeration."""
    masks = [sum(1 << x for x in e) for e in edges]
    if not masks:
        return 0
    for c in range(size + 1):
        for cover in itertools.combinations(range(size), c):
            cm = sum(1 << x for x in cover)
            if all(m & cm for m in masks):
                return c
    return size


def _up_profile(domain: Domain, table: np.ndarray) -> np.ndarray:
    """Longest alternating chain starting at each point (any starting value)."""
    N = domain.size
    f = np.asarray(table, dtype=np.int64)
    U = np.zeros(N + 1, dtype=np.int64)
    Q0 = np.zeros(N + 1, dtype=np.int64)
    Q1 = np.zeros(N + 1, dtype=np.int64)
    for idx, _, succ in reversed(_levels(domain.n, domain.d)):
        m0 = Q0[succ].max(axis=1)
        m1 = Q1[succ].max(axis=1)
        fv = f[idx]
        u = 1 + np.where(fv == 1, m0, m1)
        U[idx] = u
        Q0[idx] = np.where(fv == 0, np.maximum(m0, u), m0)
        Q1[idx] = np.where(fv == 1, np.maximum(m1, u), m1)
    return U[:-1].copy()


def _successors(domain: Domain, x: int):
    """Points strictly above x, in increasing index order."""
    if domain.d == 1:
        yield from range(x + 1, domain.size)
        return
    c = domain.decode(x)
    ranges = [range(c[i], domain.n) for i in reversed(range(domain.d))]
    strides = [domain.n ** i for i in reversed(range(domain.d))]
    it = itertools.product(*ranges)
    next(it)
    for pt in it:
        yield sum(a * s for a, s in zip(pt, strides))


def greedy_violation_matching(f, k: int, domain: Domain | None = None):
    """Greedy maximal set of disjoint violating (k+1)-chains.

    Points are scanned in index order; from each free 1-point the
    lexicographically smallest free alternating chain is taken. Returns the
    matching and the certified lower bound ``|M| / N`` on the distance.
    """
    domain, table = _table_of(f, domain)
    _guard(domain, FULL_READ_LIMIT)
    N = domain.size
    U = _up_profile(domain, table)
    free = np.ones(N, dtype=bool)
    line_dom = domain.d == 1
    if line_dom:
        # on a line the smallest continuation is the next free point of the other value
        return _greedy_line(table, k, domain)

    def dfs(y: int, rem: int):
        if rem == 1:
            return [y]
        want = 1 - table[y]
        for z in _successors(domain, y):
            if free[z] and table[z] == want and U[z] >= rem - 1:
                r = dfs(z, rem - 1)
                if r is not None:
                    return [y] + r
                U[z] = min(U[z], rem - 2)
        U[y] = min(U[y], rem - 1)
        return None

    matching = []
    for x in range(N):
        if table[x] == 1 and free[x] and U[x] >= k + 1:
            chain = dfs(x, k + 1)
            if chain is not None:
                free[chain] = False
                matching.append(tuple(chain))
    return matching, DistanceValue(Fraction(len(matching), N), lower_bound=True,
                                   matching=tuple(matching))


def _greedy_line(table, k: int, domain: Domain):
    N = domain.size
    t = np.asarray(table, dtype=np.uint8)
    # next position >= i holding value b, among free positions; positions are
    # consumed left to right so a pointer per value suffices
    pos = [list(np.flatnonzero(t == 0)), list(np.flatnonzero(t == 1))]
    free = np.ones(N, dtype=bool)
    matching = []
    for x in range(N):
        if t[x] != 1 or not free[x]:
            continue
        chain = [x]
        cur = x
        ok = True
        for step in range(k):
            want = 1 - t[cur]
            lst = pos[want]
            j = np.searchsorted(lst, cur + 1)
            while j < len(lst) and not free[lst[j]]:
                j += 1
            if j == len(lst):
                ok = False
                break
            cur = int(lst[j])
            chain.append(cur)
        if ok:
            free[chain] = False
            matching.append(tuple(chain))
    return matching, DistanceValue(Fraction(len(matching), N), lower_bound=True,
                                   matching=tuple(matching))


# ---------------------------------------------------------------------------
# extendability


def _partial_longest(domain: Domain, assign: dict) -> int:
    pts = sorted(assign)
    co = domain.coords()
    A = {}
    best = 0
    for j, x in enumerate(pts):
        fx = assign[x]
        a = 1 if fx == 1 else 0
        for y in pts[:j]:
            if assign[y] != fx and A[y] > 0 and np.all(co[y] <= co[x]):
                a = max(a, A[y] + 1)
        A[x] = a
        best = max(best, a)
    return best


def extend_partial(domain: Domain, partial: dict, k: int) -> np.ndarray:
    """Extend a k-monotone partial assignment to a total k-monotone table.

    Repeatedly picks a minimal unassigned point (smallest index, since index
    order is a linear extension) and gives it a value that creates no violation.
    """
    assign = {int(x): int(v) for x, v in partial.items()}
    if _partial_longest(domain, assign) > k:
        raise PreconditionViolated("the partial assignment is not k-monotone")
    for v in range(domain.size):
        if v in assign:
            continue
        for b in (0, 1):
            assign[v] = b
            if _partial_longest(domain, assign) <= k:
                break
        else:
            raise AssertionError("no admissible value; extendability failed")
    return np.array([assign[x] for x in range(domain.size)], dtype=np.uint8)
