"""Tolerant testers for k-monotonicity on [n]^d and the Fourier toolkit behind them.

``tolerant_test_full`` estimates the block-label distribution of f and
searches every k-monotone block function for one that fits it.
``tolerant_test_agnostic`` learns a block hypothesis by L1 polynomial
regression over indicator features and checks its distance to the class.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix, hstack, identity, vstack

from .coarsening import BlockMap
from .errors import BudgetExceeded, PreconditionViolated
from .poset import (ACCEPT, REJECT, Domain, Oracle, Verdict, exact_distance, grid,
                    k_monotone_masks, min_cost_k_monotone_line)

FILTER_LIMIT = 22
FEATURE_LIMIT = 4000


def param_ceil(x: float) -> int:
    """Ceiling that ignores float noise, so 10 / (0.45 - 0.25) gives 50, not 51."""
    return math.ceil(round(x, 9))


# ---------------------------------------------------------------------------
# k-monotone block functions


def _line_staircases(m: int, k: int):
    """Tables on [m] whose runs, counted from the first 1-run, number at most k."""
    for first in (0, 1):
        budget = k - first
        if budget < 0:
            continue
        for c in range(0, min(budget, m - 1) + 1):
            for cuts in itertools.combinations(range(1, m), c):
                t = np.empty(m, dtype=np.uint8)
                edges = (0,) + cuts + (m,)
                for r, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
                    t[a:b] = (first + r) % 2
                yield t


def enumerate_k_monotone_block_functions(m: int, d: int, k: int):
    """Every k-monotone table on [m]^d, each once (index order of the grid)."""
    if d == 1:
        yield from _line_staircases(m, k)
        return
    dom = grid(m, d)
    if dom.size > FILTER_LIMIT:
        raise BudgetExceeded(f"m^d = {dom.size} exceeds the enumeration limit {FILTER_LIMIT}")
    bits = np.uint64(1) << np.arange(dom.size, dtype=np.uint64)
    for mask in k_monotone_masks(dom, k):
        yield ((mask & bits) != 0).astype(np.uint8)


def best_block_function(cost0, cost1, m: int, d: int, k: int) -> tuple[float, np.ndarray]:
    """Cheapest k-monotone table on [m]^d under per-block label costs."""
    cost0 = np.asarray(cost0, dtype=float)
    cost1 = np.asarray(cost1, dtype=float)
    if d == 1:
        total, labels = min_cost_k_monotone_line(cost0, cost1, k)
        return float(total), labels
    dom = grid(m, d)
    if dom.size > FILTER_LIMIT:
        raise BudgetExceeded(f"m^d = {dom.size} exceeds the enumeration limit {FILTER_LIMIT}")
    masks = k_monotone_masks(dom, k)
    diff = cost1 - cost0
    score = np.full(masks.size, cost0.sum())
    for x in range(dom.size):
        on = ((masks >> np.uint64(x)) & np.uint64(1)).astype(bool)
        score[on] += diff[x]
    i = int(np.argmin(score))
    labels = ((int(masks[i]) >> np.arange(dom.size)) & 1).astype(np.uint8)
    return float(score[i]), labels


# ---------------------------------------------------------------------------
# fully tolerant block tester


@dataclass
class BlockLabelDistribution:
    """Per-block label frequencies; ``weight`` is each block's share of [n]^d."""
    m: int
    d: int
    t: int
    ones: np.ndarray
    weight: np.ndarray

    @property
    def p1(self) -> np.ndarray:
        return self.ones / self.t

    def D(self) -> np.ndarray:
        """D(x, b) as an (m^d, 2) array; rows sum to the block weight."""
        return np.stack([(1 - self.p1) * self.weight, self.p1 * self.weight], axis=1)

    def error_of(self, h) -> float:
        h = np.asarray(h)
        return float((self.D()[np.arange(h.size), 1 - h]).sum())


def full_tolerant_params(eps1: float, eps2: float, k: int, d: int) -> tuple[float, int, int]:
    alpha = eps2 - eps1
    m = param_ceil(5 * k * d / alpha)
    t = param_ceil(25 * math.log(6 * m ** d) / (2 * alpha ** 2))
    return alpha, m, t


def estimate_block_labels(f: Oracle, m: int, t: int, rng) -> BlockLabelDistribution:
    dom = f.domain
    bm = BlockMap(dom.n, dom.d, m)
    M = m ** dom.d
    pts = bm.sample_in_block(np.repeat(np.arange(M), t), rng)
    ones = f.many(pts).reshape(M, t).sum(axis=1)
    weight = bm.block_sizes() / dom.size
    return BlockLabelDistribution(m, dom.d, t, ones, weight)


def tolerant_test_full(f: Oracle, k: int, eps1: float, eps2: float, seed=None) -> Verdict:
    """Fully tolerant tester with (m^d) t queries.

    Accepts iff some k-monotone m-block function disagrees with the estimated
    labels on at most eps1 + alpha/2 of the mass. Blocks are weighted by their
    size, which matters only when m does not divide n.
    """
    if not 0 <= eps1 < eps2 <= 1:
        raise PreconditionViolated("need 0 <= eps1 < eps2 <= 1")
    d = f.domain.d
    alpha, m, t = full_tolerant_params(eps1, eps2, k, d)
    m = min(m, f.domain.n)
    if d > 1 and m ** d > FILTER_LIMIT:
        raise BudgetExceeded(f"m^d = {m ** d} exceeds the enumeration limit {FILTER_LIMIT}")
    rng = np.random.default_rng(seed)
    start = f.queries
    est = estimate_block_labels(f, m, t, rng)
    D = est.D()
    err, h = best_block_function(D[:, 1], D[:, 0], m, d, k)
    threshold = eps1 + alpha / 2
    details = {"alpha": alpha, "m": m, "t": t, "best_error": err, "threshold": threshold}
    dec = ACCEPT if err <= threshold else REJECT
    return Verdict(dec, f.queries - start, seed, None, "block search", details)


# ---------------------------------------------------------------------------
# Fourier analysis over [r]^d


def orthonormal_basis(r: int) -> np.ndarray:
    """Rows phi_0 = 1, phi_1, ... orthonormal under the uniform measure on {0..r-1}.

    Gram-Schmidt on 1, x, x^2, ... (via QR); each phi_a is signed so that
    phi_a(0) > 0, which gives phi_1(x) = 1 - 2x for r = 2.
    """
    x = np.arange(r, dtype=float)
    V = np.vander(x, r, increasing=True)
    Q, _ = np.linalg.qr(V)
    Phi = (Q * math.sqrt(r)).T
    Phi *= np.sign(Phi[:, 0])[:, None]
    return Phi


@dataclass
class FourierTable:
    coeffs: np.ndarray
    basis: np.ndarray

    @property
    def r(self) -> int:
        return self.basis.shape[0]

    @property
    def d(self) -> int:
        return self.coeffs.ndim

    def weights(self) -> np.ndarray:
        """|alpha| (number of nonzero coordinates) for every coefficient."""
        return sum(np.indices(self.coeffs.shape)[i] > 0 for i in range(self.d))

    def total_mass(self) -> float:
        return float((self.coeffs ** 2).sum())

    def total_influence(self) -> float:
        return float((self.weights() * self.coeffs ** 2).sum())

    def tail(self, t: float) -> float:
        """Fourier mass on coefficients with |alpha| > t."""
        return float((self.coeffs[self.weights() > t] ** 2).sum())

    def truncate(self, t: float) -> np.ndarray:
        """Values of p = sum over |alpha| <= t of fhat(alpha) phi_alpha, indexed by x."""
        c = np.where(self.weights() <= t, self.coeffs, 0.0)
        for ax in range(self.d):
            c = np.moveaxis(np.tensordot(self.basis.T, c, axes=([1], [ax])), 0, ax)
        return c


def to_pm1(table) -> np.ndarray:
    """0/1 values as +-1, with b -> 1 - 2b."""
    return 1.0 - 2.0 * np.asarray(table, dtype=float)


def fourier_transform(f, domain: Domain, basis: np.ndarray | None = None) -> FourierTable:
    """fhat(alpha) = E_x[f(x) phi_alpha(x)] for a full real-valued table on [r]^d."""
    if domain.size > 1 << 20:
        raise BudgetExceeded("table too large for a full transform")
    r = domain.n
    Phi = orthonormal_basis(r) if basis is None else basis
    c = domain.view(np.asarray(f, dtype=float)).astype(float)
    for ax in range(domain.d):
        c = np.moveaxis(np.tensordot(Phi, c, axes=([1], [ax])), 0, ax) / r
    return FourierTable(c, Phi)


def influence(f, domain: Domain) -> tuple[np.ndarray, float]:
    """Per-coordinate influences 2 Pr[f(x) != f(x^(i))] and their sum, exactly.

    x^(i) resamples coordinate i uniformly (possibly to the same value). Only
    which points agree matters, so 0/1 and +-1 tables give the same result.
    For a line along axis i with c points in one class, the disagreement
    probability is 2 c (r - c) / r^2.
    """
    if domain.size > 1 << 22:
        raise BudgetExceeded("table too large for exact influences")
    r = domain.n
    t = np.asarray(f).reshape(-1)
    v = domain.view(t == t[0])
    out = np.zeros(domain.d)
    for i in range(domain.d):
        c = v.sum(axis=i)
        out[i] = 2 * (2 * c * (r - c) / r ** 2).mean()
    return out, float(out.sum())


# ---------------------------------------------------------------------------
# agnostic learning by L1 polynomial regression


def indicator_features(r: int, d: int, degree: int) -> list[tuple]:
    """Monomials over the indicators 1{x_i = j}: sets of (i, j) with distinct i.

    Products with a repeated coordinate vanish or repeat a lower monomial, so
    they are left out.
    """
    out = [()]
    for s in range(1, min(degree, d) + 1):
        for coords in itertools.combinations(range(d), s):
            for vals in itertools.product(range(r), repeat=s):
                out.append(tuple(zip(coords, vals)))
    return out


def feature_matrix(X: np.ndarray, feats: list[tuple]) -> np.ndarray:
    cols = []
    for mono in feats:
        col = np.ones(X.shape[0], dtype=bool)
        for i, j in mono:
            col &= X[:, i] == j
        cols.append(col)
    return np.stack(cols, axis=1).astype(float)


@dataclass
class RegressionHypothesis:
    r: int
    d: int
    degree: int
    values: np.ndarray            # p on every point of [r]^d, index order
    method: str = "lp"
    conforming: bool = True
    details: dict = field(default_factory=dict)

    def l1_loss(self, samples_x, labels) -> float:
        return float(np.abs(self.values[np.asarray(samples_x)] - np.asarray(labels)).sum())

    def predict(self, idx) -> np.ndarray:
        return (self.values[np.asarray(idx)] >= 0.5).astype(np.uint8)

    def table(self) -> np.ndarray:
        return (self.values >= 0.5).astype(np.uint8)


def _l1_fit_lp(A: np.ndarray, n0: np.ndarray, n1: np.ndarray) -> np.ndarray:
    """Coefficients w minimizing sum_x n0_x |A_x w| + n1_x |A_x w - 1|, as a linear program.

    Variables are w (free) and slacks u_x >= |p_x|, v_x >= |p_x - 1|.
    """
    U, F = A.shape
    As = csr_matrix(A)
    I = identity(U, format="csr")
    Z = csr_matrix((U, U))
    rows = vstack([
        hstack([As, -I, Z]),       # p - u <= 0
        hstack([-As, -I, Z]),      # -p - u <= 0
        hstack([As, Z, -I]),       # p - v <= 1
        hstack([-As, Z, -I]),      # -p - v <= -1
    ]).tocsr()
    b = np.concatenate([np.zeros(U), np.zeros(U), np.ones(U), -np.ones(U)])
    c = np.concatenate([np.zeros(F), n0, n1])
    bounds = [(None, None)] * F + [(0, None)] * (2 * U)
    res = linprog(c, A_ub=rows, b_ub=b, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"L1 regression LP failed: {res.message}")
    return res.x[:F]


def pooled_median(idx, labels, N: int) -> np.ndarray:
    """Per-point median of 0/1 labels; an even split gives 1/2, unseen points 0."""
    idx = np.asarray(idx, dtype=np.int64)
    n1 = np.bincount(idx, weights=np.asarray(labels, dtype=float), minlength=N)
    n0 = np.bincount(idx, minlength=N) - n1
    p = np.where(n1 > n0, 1.0, np.where(n1 < n0, 0.0, 0.5))
    p[n0 + n1 == 0] = 0.0
    return p


def agnostic_learn_kkms(samples_x: np.ndarray, labels: np.ndarray, r: int, d: int,
                        degree: int, method: str = "auto") -> RegressionHypothesis:
    """L1 regression of 0/1 labels on the degree-limited indicator span over [r]^d.

    ``samples_x`` holds point indices of [r]^d. Samples are pooled per point,
    so the LP has one row pair per distinct point. When the degree reaches d
    the span holds every function, and the exact optimum is a per-point
    median; ``method='auto'`` then takes it directly instead of solving the
    LP. ``method='lstsq'`` solves least squares and is marked non-conforming.
    """
    dom = grid(r, d)
    N = dom.size
    idx = np.asarray(samples_x, dtype=np.int64)
    y = np.asarray(labels, dtype=np.int64)
    n1 = np.bincount(idx, weights=y, minlength=N)
    n0 = np.bincount(idx, minlength=N) - n1
    seen = np.flatnonzero(n0 + n1 > 0)
    if method not in ("auto", "lp", "lstsq", "median"):
        raise ValueError("method must be 'auto', 'lp', 'lstsq' or 'median'")
    if method == "median" or (method == "auto" and degree >= d):
        if degree < d:
            raise PreconditionViolated("the median shortcut needs degree >= d")
        return RegressionHypothesis(r, d, degree, pooled_median(idx, y, N), "median", True,
                                    {"features": N, "points": int(seen.size)})
    feats = indicator_features(r, d, degree)
    if len(feats) > FEATURE_LIMIT:
        raise BudgetExceeded(f"{len(feats)} features exceed the limit {FEATURE_LIMIT}")
    X_all = dom.coords()
    A_all = feature_matrix(X_all, feats)
    A = A_all[seen]
    if method == "lstsq":
        wts = np.sqrt(n0[seen] + n1[seen])
        target = n1[seen] / (n0[seen] + n1[seen])
        w = np.linalg.lstsq(A * wts[:, None], target * wts, rcond=None)[0]
    else:
        w = _l1_fit_lp(A, n0[seen], n1[seen])
    kind = "lstsq" if method == "lstsq" else "lp"
    return RegressionHypothesis(r, d, degree, A_all @ w, kind, kind == "lp",
                                {"features": len(feats), "points": int(seen.size)})


# ---------------------------------------------------------------------------
# agnostic tolerant tester


def agnostic_params(eps1: float, eps2: float, k: int, d: int) -> dict:
    """Parameters with the unnamed accuracy read as alpha = eps2 - 3 eps1."""
    alpha = eps2 - 3 * eps1
    m = param_ceil(6 * k * d / alpha)
    t = param_ceil(3 * d * (k + 1) / alpha * math.log(m) + math.log(100))
    degree = min(param_ceil(k * math.sqrt(d) * (12 / alpha) ** 2), d)
    est = param_ceil(math.log(20) / (2 * (alpha / 7) ** 2))
    return {"alpha": alpha, "m": m, "t": t, "degree": degree, "estimate_samples": est}


def tolerant_test_agnostic(f: Oracle, k: int, eps1: float, eps2: float, seed=None,
                           method: str = "auto", max_degree: int | None = None) -> Verdict:
    """Tolerant tester for eps2 > 3 eps1 through an agnostic learner on [m]^d.

    Samples of D are (uniform block, label of a uniform point in it). The
    learner sees m^d * t samples. Its hypothesis is rejected if its estimated
    error exceeds eps1 + 5 alpha/12; otherwise the exact distance from the
    hypothesis table to k-monotone on [m]^d decides against 2 eps1 + 5 alpha/12.
    """
    if not 0 <= 3 * eps1 < eps2 <= 1:
        raise PreconditionViolated("need eps2 > 3 eps1 >= 0")
    dom = f.domain
    d = dom.d
    p = agnostic_params(eps1, eps2, k, d)
    m = min(p["m"], dom.n)
    degree = p["degree"] if max_degree is None else min(p["degree"], max_degree)
    rng = np.random.default_rng(seed)
    start = f.queries
    bm = BlockMap(dom.n, d, m)
    M = m ** d

    def draw(s):
        blocks = rng.integers(0, M, s)
        return blocks, f.many(bm.sample_in_block(blocks, rng)).astype(np.int64)

    xb, yb = draw(M * p["t"])
    h = agnostic_learn_kkms(xb, yb, m, d, degree, method)
    xe, ye = draw(p["estimate_samples"])
    err = float((h.predict(xe) != ye).mean())
    alpha = p["alpha"]
    details = dict(p, m=m, degree=degree, estimate=err, method=h.method,
                   conforming=h.conforming)
    if err > eps1 + 5 * alpha / 12:
        return Verdict(REJECT, f.queries - start, seed, None, "hypothesis error too large",
                       details)
    dist = float(exact_distance(h.table(), k, grid(m, d)).value)
    details["hypothesis_distance"] = dist
    dec = ACCEPT if dist <= 2 * eps1 + 5 * alpha / 12 else REJECT
    return Verdict(dec, f.queries - start, seed, None, "hypothesis distance", details)
