"""Seeded generators for hard and easy instance families.

Every generator returns an :class:`InstanceBundle` whose metadata is
recomputed from the truth table: the k-monotonicity flag, an exact distance
when an exact engine fits, and a greedy-matching lower bound otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ConstructionFailed, PreconditionViolated
from .poset import (BRUTE_FORCE_LIMIT, Domain, Oracle, cube, exact_distance,
                    exact_distance_line_dp, greedy_violation_matching, grid, is_k_monotone,
                    line)

EXACT_MATCHING_LIMIT = 4096


@dataclass
class InstanceBundle:
    oracle: Oracle
    family: str
    params: dict
    seed: int | None
    metadata: dict = field(default_factory=dict)

    @property
    def domain(self) -> Domain:
        return self.oracle.domain

    @property
    def table(self) -> np.ndarray:
        return self.oracle.truth

    def fresh_oracle(self) -> Oracle:
        return self.oracle.fresh()

    def spec(self) -> dict:
        """The generator description used by function files."""
        return {"kind": "generator", "name": self.family, "params": self.params,
                "seed": self.seed}


def _frac(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


def certify(table, k: int, domain: Domain, exact: bool | None = None) -> dict:
    """Distance metadata for a table.

    Exact engines are used on lines, tiny domains and k = 1 up to 4096
    points, or whenever ``exact`` is true. Otherwise the greedy matching
    gives a certified lower bound.
    """
    table = np.asarray(table, dtype=np.uint8)
    mono = bool(is_k_monotone(table, k, domain))
    meta = {"k": k, "is_k_monotone": mono}
    if mono:
        meta["distance"] = "0/1"
        meta["distance_exact"] = True
        return meta
    if exact is None:
        exact = (domain.d == 1 or domain.size <= BRUTE_FORCE_LIMIT
                 or (k == 1 and domain.size <= EXACT_MATCHING_LIMIT))
    if exact:
        dv = exact_distance(table, k, domain)
        meta["distance"] = _frac(dv.value)
        meta["distance_exact"] = True
    else:
        _, dv = greedy_violation_matching(table, k, domain)
        meta["distance"] = _frac(dv.value)
        meta["distance_exact"] = False
    return meta


def certified_distance(bundle: InstanceBundle) -> Fraction:
    """Exact distance or certified lower bound recorded in the metadata."""
    return Fraction(bundle.metadata["distance"])


def _bundle(domain, table, family, params, seed, k, extra=None, exact=None) -> InstanceBundle:
    meta = certify(table, k, domain, exact)
    if extra:
        meta.update(extra)
    return InstanceBundle(Oracle(domain, table, {"family": family}), family, params, seed, meta)


# ---------------------------------------------------------------------------
# line: the g_v family


def gen_gv_line(n: int, k: int, eps: float, seed=None) -> InstanceBundle:
    """Blocks B_1..B_K with K = k/eps; odd blocks take v_i, even blocks are 1.

    Each v_i is 0 with probability 6 eps. When k/eps is not integral the
    nearest integer is used and recorded.
    """
    if n < 1 or k < 1 or not 0 < eps <= 1:
        raise PreconditionViolated("need n, k >= 1 and eps in (0, 1]")
    K = max(1, round(k / eps))
    if K > n:
        raise PreconditionViolated(f"{K} blocks do not fit in [{n}]")
    p = min(1.0, 6 * eps)
    rng = np.random.default_rng(seed)
    odd = (K + 1) // 2
    v = (rng.random(odd) >= p).astype(np.uint8)
    blocks = np.ones(K, dtype=np.uint8)
    blocks[0::2] = v
    bounds = np.round(np.arange(K + 1) * n / K).astype(np.int64)
    table = np.repeat(blocks, np.diff(bounds))
    extra = {"blocks": K, "block_count_exact": K == k / eps, "p_zero": p,
             "zero_blocks": int((v == 0).sum()), "expected_zero_blocks": p * odd}
    params = {"n": n, "k": k, "eps": eps}
    return _bundle(line(n), table, "gv_line", params, seed, k, extra)


# ---------------------------------------------------------------------------
# cube: anti-parity and g || h


def _weights(d: int) -> np.ndarray:
    idx = np.arange(1 << d, dtype=np.int64)
    w = np.zeros_like(idx)
    for i in range(d):
        w += (idx >> i) & 1
    return w


def anti_parity_table(d: int, S) -> np.ndarray:
    """NOT of the parity of the coordinates in S (1-based) inside ||x| - d/2| <= sqrt d, else 0."""
    S = tuple(int(i) for i in S)
    if any(not 1 <= i <= d for i in S) or len(set(S)) != len(S):
        raise PreconditionViolated("S must be distinct coordinates in 1..d")
    idx = np.arange(1 << d, dtype=np.int64)
    par = np.zeros_like(idx)
    for i in S:
        par ^= (idx >> (i - 1)) & 1
    inside = np.abs(_weights(d) - d / 2) <= math.sqrt(d)
    return ((1 - par) * inside).astype(np.uint8)


def anti_parity_bound(t: int, k: int) -> Fraction:
    """sum_{i <= (t-k-1)/2} C(t, i) / 2^t, taken with constant 1."""
    top = (t - k - 1) // 2
    if top < 0:
        return Fraction(0)
    return Fraction(sum(math.comb(t, i) for i in range(top + 1)), 2 ** t)


def gen_anti_parity_fS(d: int, S, seed=None, k: int = 1) -> InstanceBundle:
    table = anti_parity_table(d, S)
    extra = {"t": len(tuple(S)), "farness_bound": _frac(anti_parity_bound(len(tuple(S)), k))}
    params = {"d": d, "S": [int(i) for i in S], "k": k}
    return _bundle(cube(d), table, "anti_parity", params, seed, k, extra)


def staircase_bands(dh: int, k: int) -> list:
    """Cut layers c_1 < ... < c_{k-1} splitting {0,1}^dh into k weight bands.

    Each cut is the layer boundary whose cumulative mass is closest to
    i 2^dh / k. Raises ConstructionFailed when a band leaves
    [(1 - k/sqrt dh), (1 + k/sqrt dh)] 2^dh / k or is empty.
    """
    if k < 1 or dh < 1:
        raise PreconditionViolated("need k, d >= 1")
    cum = np.cumsum([0] + [math.comb(dh, w) for w in range(dh + 1)])
    total = 2 ** dh
    cuts, prev = [], 0
    for i in range(1, k):
        target = i * total / k
        best = min(range(prev + 1, dh + 1), key=lambda c: abs(cum[c] - target), default=None)
        if best is None:
            raise ConstructionFailed(f"no layer boundary left for band {i + 1}")
        cuts.append(best)
        prev = best
    edges = [0] + cuts + [dh + 1]
    sizes = [int(cum[b] - cum[a]) for a, b in zip(edges, edges[1:])]
    lo = (1 - k / math.sqrt(dh)) * total / k
    hi = (1 + k / math.sqrt(dh)) * total / k
    for s in sizes:
        if s == 0 or not lo <= s <= hi:
            raise ConstructionFailed(f"band sizes {sizes} leave [{lo:.2f}, {hi:.2f}]")
    return cuts


def staircase_h(dh: int, k: int) -> np.ndarray:
    """Value (i + 1) mod 2 on the i-th band, i = 1..k."""
    cuts = staircase_bands(dh, k)
    band = np.searchsorted(np.asarray(cuts), _weights(dh), side="right")
    return ((band + 2) % 2).astype(np.uint8)


G_FAMILIES = ("dictator", "anti_dictator", "majority", "anti_majority", "parity",
              "anti_parity", "random")


def g_table(name: str, dh: int, seed=None) -> np.ndarray:
    """A named function on {0,1}^dh used as the g of a composition."""
    w = _weights(dh)
    idx = np.arange(1 << dh)
    if name == "dictator":
        t = idx & 1
    elif name == "anti_dictator":
        t = 1 - (idx & 1)
    elif name == "majority":
        t = 2 * w >= dh
    elif name == "anti_majority":
        t = 2 * w < dh
    elif name == "parity":
        t = w & 1
    elif name == "anti_parity":
        t = 1 - (w & 1)
    elif name == "random":
        t = np.random.default_rng(seed).integers(0, 2, idx.size)
    else:
        raise PreconditionViolated(f"unknown g family {name!r}")
    return np.asarray(t, dtype=np.uint8)


def compose_gh(g, h) -> np.ndarray:
    """(g || h)(x, y) = g(x) xor h(y); x fills the low coordinates."""
    g = np.asarray(g, dtype=np.uint8)
    h = np.asarray(h, dtype=np.uint8)
    return (h[:, None] ^ g[None, :]).reshape(-1)


def gen_compose_gh(g, k: int, seed=None, exact: bool = False) -> InstanceBundle:
    """g || h on {0,1}^(2 dh) for g on {0,1}^dh, given as a table or a family name.

    Metadata records the distance of g from monotone when it fits and a
    greedy-matching certificate for the composition.
    """
    if isinstance(g, str):
        # a named g comes as "name:dh"
        if ":" not in g:
            raise PreconditionViolated("a named g needs the form name:dh")
        name, dh = g.split(":")
        gt = g_table(name, int(dh), seed)
        gdesc = {"g": name, "dh": int(dh)}
    else:
        gt = np.asarray(g, dtype=np.uint8)
        gdesc = {"g_bits": np.packbits(gt, bitorder="little").tobytes().hex(),
                 "dh": int(gt.size).bit_length() - 1}
    dh = int(gt.size).bit_length() - 1
    if gt.size != 1 << dh:
        raise PreconditionViolated("g must be a table over a hypercube")
    h = staircase_h(dh, k)
    table = compose_gh(gt, h)
    extra = {"h_cuts": staircase_bands(dh, k),
             "g_is_monotone": bool(is_k_monotone(gt, 1, cube(dh)))}
    if dh >= 1:
        extra["g_distance"] = _frac(exact_distance(gt, 1, cube(dh)).value)
    params = {"k": k, **gdesc}
    return _bundle(cube(2 * dh), table, "compose_gh", params, seed, k, extra, exact)


# ---------------------------------------------------------------------------
# random k-monotone instances and noise


def _staircase_on(phi: np.ndarray, k: int, rng) -> np.ndarray:
    """A staircase of phi with at most k alternations counted from the first 1."""
    levels = np.unique(phi)
    start = int(rng.integers(0, 2))
    jmax = min(k - start, levels.size - 1)
    j = int(rng.integers(0, jmax + 1)) if jmax > 0 else 0
    cuts = np.sort(rng.choice(levels[1:], size=j, replace=False)) if j else np.array([])
    steps = np.searchsorted(cuts, phi, side="right")
    return ((start + steps) % 2).astype(np.uint8)


def _potential(coords: np.ndarray, rng) -> np.ndarray:
    """A random order-preserving score: positive linear part plus nonnegative pair terms."""
    d = coords.shape[1]
    w = rng.random(d) + 0.05
    phi = coords @ w
    if d > 1:
        V = np.triu(rng.random((d, d)) * (rng.random((d, d)) < 0.3), 1)
        phi = phi + np.einsum("ni,ij,nj->n", coords, V, coords)
    return np.round(phi, 9)


def _divisors(n: int) -> list:
    return [m for m in range(1, n + 1) if n % m == 0]


def random_k_monotone_table(domain: Domain, k: int, rng, inflate: bool = True) -> tuple[np.ndarray, dict]:
    info = {}
    if domain.d == 1:
        n = domain.n
        start = int(rng.integers(0, 2))
        j = int(rng.integers(0, min(k - start, n - 1) + 1)) if k - start > 0 and n > 1 else 0
        cuts = np.sort(rng.choice(np.arange(1, n), size=j, replace=False)) if j else []
        steps = np.searchsorted(np.asarray(cuts), np.arange(n), side="right")
        return ((start + steps) % 2).astype(np.uint8), {"changepoints": [int(c) for c in cuts]}
    if domain.kind == "grid" and inflate:
        # a staircase on a block grid [m]^d inflated back to [n]^d
        m = int(rng.choice([m for m in _divisors(domain.n) if m >= 2] or [1]))
        coarse = grid(m, domain.d) if m > 1 else None
        if coarse is None:
            return np.full(domain.size, int(rng.integers(0, 2)), dtype=np.uint8), {"m": 1}
        small = _staircase_on(_potential(coarse.coords(), rng), k, rng)
        blk = domain.coords() // (domain.n // m)
        table = small[(blk * coarse.strides()).sum(axis=1)]
        info["m"] = m
        return table, info
    return _staircase_on(_potential(domain.coords(), rng), k, rng), info


def gen_random_k_monotone(domain: Domain, k: int, seed=None, certify_fn=True,
                          inflate: bool = True) -> InstanceBundle:
    rng = np.random.default_rng(seed)
    table, info = random_k_monotone_table(domain, k, rng, inflate)
    if not is_k_monotone(table, k, domain):
        raise ConstructionFailed("random staircase is not k-monotone")
    params = {"domain": domain.to_json(), "k": k, "inflate": inflate}
    if not certify_fn:
        meta = {"k": k, "is_k_monotone": True, "distance": "0/1", "distance_exact": True, **info}
        return InstanceBundle(Oracle(domain, table, {"family": "random_k_monotone"}),
                              "random_k_monotone", params, seed, meta)
    return _bundle(domain, table, "random_k_monotone", params, seed, k, info)


def gen_noisy(bundle: InstanceBundle, rho: float, seed=None, exact=None) -> InstanceBundle:
    """Flip a uniform subset of exactly floor(rho N) points."""
    if not 0 <= rho <= 1:
        raise PreconditionViolated("rho must lie in [0, 1]")
    N = bundle.domain.size
    flips = math.floor(rho * N)
    rng = np.random.default_rng(seed)
    table = bundle.table.copy()
    if flips:
        table[rng.choice(N, size=flips, replace=False)] ^= 1
    k = bundle.metadata["k"]
    params = {"base": bundle.spec(), "rho": rho}
    extra = {"flips": flips}
    return _bundle(bundle.domain, table, "noisy", params, seed, k, extra, exact)


# ---------------------------------------------------------------------------
# square grid: column bands


def random_band(n: int, rng, min_width: int) -> tuple[np.ndarray, np.ndarray]:
    """Padded band limits l >= ... non-increasing, h >= l + min_width, both non-increasing."""
    l = np.sort(rng.integers(0, n + 2 - min_width, n))[::-1]
    extra = np.sort(rng.integers(0, n + 1, n))[::-1]
    return l, np.minimum(n + 1, l + min_width + extra)


def gen_band_grid(n: int, seed=None, width: float = 0.2) -> InstanceBundle:
    """A 2-monotone [n]^2 instance: every column a band of ones that drifts downwards."""
    from .grid2 import band_table

    rng = np.random.default_rng(seed)
    l, h = random_band(n, rng, max(1, int(width * n)))
    table = band_table(l, h, n)
    return _bundle(grid(n, 2), table, "band_grid", {"n": n, "width": width}, seed, 2)


def gen_stripes(n: int, period: int = 2, seed=None) -> InstanceBundle:
    """Columns alternate between all ones and all zeros; far from 2-monotone."""
    v = np.zeros((n, n), dtype=np.uint8)
    v[:, ::period] = 1
    dom = grid(n, 2)
    return _bundle(dom, dom.flat(v), "stripes", {"n": n, "period": period}, seed, 2)


# ---------------------------------------------------------------------------
# registry for function files and the CLI


def _domain_arg(p: dict) -> Domain:
    if "domain" in p:
        return Domain.from_json(p["domain"])
    kind = p.get("kind", "line")
    if kind == "cube":
        return cube(int(p["d"]))
    return grid(int(p["n"]), int(p.get("d", 1)))


FAMILIES = {
    "gv_line": lambda p, s: gen_gv_line(int(p["n"]), int(p["k"]), float(p["eps"]), s),
    "anti_parity": lambda p, s: gen_anti_parity_fS(int(p["d"]), p["S"], s, int(p.get("k", 1))),
    "compose_gh": lambda p, s: gen_compose_gh(
        p["g"] + ":" + str(p["dh"]) if "g" in p else
        np.unpackbits(np.frombuffer(bytes.fromhex(p["g_bits"]), dtype=np.uint8),
                      bitorder="little")[:1 << int(p["dh"])],
        int(p["k"]), s),
    "random_k_monotone": lambda p, s: gen_random_k_monotone(_domain_arg(p), int(p["k"]), s,
                                                            inflate=bool(p.get("inflate", True))),
    "band_grid": lambda p, s: gen_band_grid(int(p["n"]), s, float(p.get("width", 0.2))),
    "stripes": lambda p, s: gen_stripes(int(p["n"]), int(p.get("period", 2)), s),
    "noisy": lambda p, s: gen_noisy(generate(p["base"]["name"], p["base"]["params"],
                                             p["base"]["seed"]), float(p["rho"]), s),
}


def generate(name: str, params: dict, seed=None) -> InstanceBundle:
    if name not in FAMILIES:
        raise PreconditionViolated(f"unknown family {name!r}; known: {sorted(FAMILIES)}")
    return FAMILIES[name](params, seed)
