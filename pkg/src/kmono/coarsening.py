"""Block partitions of [n]^d and the coarsened functions built on them."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import PreconditionViolated
from .poset import Domain, Oracle, _table_of, grid, is_k_monotone

STAR = 2


@dataclass(frozen=True)
class BlockMap:
    """Partition of [n]^d into m^d blocks; coordinate y lies in block floor(y*m/n)."""

    n: int
    d: int
    m: int

    def __post_init__(self):
        if not 1 <= self.m <= self.n:
            raise ValueError("need 1 <= m <= n")

    @property
    def block_domain(self) -> Domain:
        return grid(self.m, self.d)

    def axis_block(self, y):
        return np.asarray(y, dtype=np.int64) * self.m // self.n

    def axis_range(self, b: int) -> range:
        """Coordinates y with floor(y*m/n) = b."""
        lo = -(-b * self.n // self.m)
        hi = -(-(b + 1) * self.n // self.m)
        return range(lo, hi)

    def axis_bounds(self) -> np.ndarray:
        """Start coordinate of each axis block, followed by n."""
        b = np.arange(self.m + 1, dtype=np.int64)
        return -(-b * self.n // self.m)

    def block_of(self, idx):
        """Block index (in [m]^d encoding) of point indices of [n]^d."""
        idx = np.asarray(idx, dtype=np.int64)
        out = np.zeros_like(idx)
        scale = 1
        for _ in range(self.d):
            idx, r = np.divmod(idx, self.n)
            out = out + self.axis_block(r) * scale
            scale *= self.m
        return out

    def block_points(self, block: int) -> np.ndarray:
        """All point indices of [n]^d inside a block."""
        bc = grid(self.m, self.d).decode(block)
        ranges = [np.array(self.axis_range(b)) for b in bc]
        pts = np.zeros(1, dtype=np.int64)
        scale = 1
        for r in ranges:
            pts = (pts[None, :] + (r * scale)[:, None]).reshape(-1)
            scale *= self.n
        return np.sort(pts)

    def block_sizes(self) -> np.ndarray:
        sides = np.diff(self.axis_bounds())
        out = np.ones(1, dtype=np.int64)
        for _ in range(self.d):
            out = (out[None, :] * sides[:, None]).reshape(-1)
        return out

    def sample_in_block(self, blocks, rng) -> np.ndarray:
        """One uniform point of [n]^d inside each requested block."""
        blocks = np.asarray(blocks, dtype=np.int64)
        bounds = self.axis_bounds()
        out = np.zeros(blocks.shape, dtype=np.int64)
        scale = 1
        rest = blocks
        for _ in range(self.d):
            rest, b = np.divmod(rest, self.m)
            lo, hi = bounds[b], bounds[b + 1]
            y = lo + (rng.random(blocks.shape) * (hi - lo)).astype(np.int64)
            out = out + y * scale
            scale *= self.n
        return out

    def inflate(self, block_table) -> np.ndarray:
        """The m-block function on [n]^d taking the given value on each block."""
        bt = np.asarray(block_table).reshape(-1)
        return bt[self.block_of(np.arange(self.n ** self.d))]


@dataclass(frozen=True)
class CoarsenedFunction:
    values: np.ndarray
    rule: str

    def filled(self) -> np.ndarray:
        """Values with every star replaced by 0."""
        v = np.asarray(self.values).copy()
        v[v == STAR] = 0
        return v.astype(np.uint8)


def coarsen_majority(f, m: int, domain: Domain | None = None) -> CoarsenedFunction:
    """Blockwise majority vote (ties to 0), the m-block-coarsening f_m."""
    domain, table = _table_of(f, domain)
    bm = BlockMap(domain.n, domain.d, m)
    blk = bm.block_of(np.arange(domain.size))
    ones = np.bincount(blk, weights=table, minlength=m ** domain.d)
    sizes = np.bincount(blk, minlength=m ** domain.d)
    return CoarsenedFunction((2 * ones > sizes).astype(np.uint8), "majority")


def block_minority_counts(f, m: int, domain: Domain | None = None) -> tuple:
    """Per-block minority counts and sizes."""
    domain, table = _table_of(f, domain)
    bm = BlockMap(domain.n, domain.d, m)
    blk = bm.block_of(np.arange(domain.size))
    ones = np.bincount(blk, weights=table, minlength=m ** domain.d).astype(np.int64)
    sizes = np.bincount(blk, minlength=m ** domain.d)
    return np.minimum(ones, sizes - ones), sizes


def coarsening_distance(f, m: int, domain: Domain | None = None) -> Fraction:
    """Exact dist(f, f_m): the total blockwise minority over N."""
    domain, table = _table_of(f, domain)
    minority, _ = block_minority_counts(table, m, domain)
    return Fraction(int(minority.sum()), domain.size)


def coarsen_endpoint_line(f: Oracle, K: int) -> CoarsenedFunction:
    """Endpoint rule on a line: a block whose two endpoints disagree becomes a star.

    Reads exactly the two endpoints of every block (one point for singleton blocks).
    """
    n = f.domain.size
    bm = BlockMap(n, 1, K)
    bounds = bm.axis_bounds()
    lo = bounds[:-1]
    hi = bounds[1:] - 1
    single = lo == hi
    ends = np.unique(np.concatenate([lo, hi]))
    vals = dict(zip(ends.tolist(), f.many(ends).tolist()))
    left = np.array([vals[x] for x in lo.tolist()])
    right = np.array([vals[x] for x in hi.tolist()])
    out = np.where((left == right) | single, left, STAR).astype(np.uint8)
    return CoarsenedFunction(out, "endpoint")


def variable_blocks(f, m: int, eps: float, domain: Domain | None = None) -> np.ndarray:
    """Blocks whose minority fraction is at least eps/100 (exact, full read)."""
    domain, table = _table_of(f, domain)
    minority, sizes = block_minority_counts(table, m, domain)
    return np.flatnonzero(minority >= eps / 100 * sizes)


def variable_block_fraction_test(f: Oracle, m: int, eps: float, k: int, rng,
                                 delta: float = 0.1, block_samples: int | None = None,
                                 per_block: int | None = None) -> tuple[str, int]:
    """Distinguish at most k variable blocks from more than 5k/4 of them.

    ``block_samples`` random blocks are probed with ``per_block`` uniform points
    each; a block is flagged when both values show up, so constant blocks are
    never flagged and a block whose minority fraction is at least eps/6 is
    missed with probability at most delta/(2q). The verdict compares the flagged
    count with the midpoint of qk/m and 5qk/(4m).
    Returns ``("<=k" or ">5k/4", flagged count)``.
    """
    n = f.domain.size
    bm = BlockMap(n, 1, m)
    q = block_samples or math.ceil(800 / eps)
    r = per_block or math.ceil((6 / eps) * math.log(2 * q / delta))
    blocks = rng.integers(0, m, q)
    pts = bm.sample_in_block(np.repeat(blocks, r), rng)
    vals = f.many(pts).reshape(q, r)
    flagged = int((vals.min(axis=1) != vals.max(axis=1)).sum())
    threshold = q * (k + 5 * k / 4) / (2 * m)
    return ("<=k" if flagged <= threshold else ">5k/4"), flagged


def diagonal_chains(m: int, d: int) -> list:
    """The chains x + l*(1,...,1) of [m]^d starting at points with a zero coordinate."""
    dom = grid(m, d)
    out = []
    for idx in range(dom.size):
        c = np.array(dom.decode(idx))
        if (c == 0).any():
            steps = m - int(c.max())
            out.append([dom.encode(c + t) for t in range(steps)])
    return out


def nonconstant_blocks(f, m: int, domain: Domain | None = None) -> np.ndarray:
    domain, table = _table_of(f, domain)
    minority, _ = block_minority_counts(table, m, domain)
    return minority > 0


def max_nonconstant_per_diagonal(f, m: int, domain: Domain | None = None) -> int:
    """Largest number of nonconstant blocks on a single diagonal chain of blocks."""
    domain, table = _table_of(f, domain)
    nc = nonconstant_blocks(table, m, domain)
    return max(int(nc[ch].sum()) for ch in diagonal_chains(m, domain.d))


def check_coarsening_lemma(f, k: int, m: int, domain: Domain | None = None) -> bool:
    """dist(f, f_m) < kd/m for k-monotone f."""
    domain, table = _table_of(f, domain)
    if not is_k_monotone(table, k, domain):
        raise PreconditionViolated("f is not k-monotone")
    return coarsening_distance(table, m, domain) < Fraction(k * domain.d, m)
