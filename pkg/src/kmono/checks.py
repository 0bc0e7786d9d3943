"""Named invariant suites, run by ``kmt lemma-check --name <id>``.

Each suite draws seeded random instances, checks one structural property
against an exact computation and reports the number of cases and failures.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .adversaries import gen_random_k_monotone
from .coarsening import check_coarsening_lemma
from .cube import MiddleWindow, truncated_value
from .errors import PreconditionViolated
from .highdim import influence
from .l1bridge import RealFunction, l1_distance_monotone, l1_equals_hamming_check, round_m
from .poset import (cube, exact_distance_bruteforce, exact_distance_line_dp, extend_partial,
                    greedy_violation_matching, grid, is_k_monotone, line)


def _report(name, cases, failures, examples):
    return {"name": name, "cases": cases, "failures": failures, "examples": examples[:3]}


def check_coarsening(count=1000, seed=0):
    """Majority coarsening of a k-monotone f on [n]^d stays within kd/m."""
    rng = np.random.default_rng(seed)
    cases = fails = 0
    bad = []
    for n, d, k in ((16, 2, 2), (27, 3, 1)):
        ms = [m for m in range(2, n + 1) if n % m == 0]
        for _ in range(count // 2):
            b = gen_random_k_monotone(grid(n, d), k, int(rng.integers(1 << 62)), certify_fn=False,
                                      inflate=False)
            m = int(rng.choice(ms))
            cases += 1
            if not check_coarsening_lemma(b.table, k, m, b.domain):
                fails += 1
                bad.append({"n": n, "d": d, "k": k, "m": m, "seed": b.seed})
    return _report("coarsening", cases, fails, bad)


def check_influence(count=1000, seed=0):
    """Total influence of a k-monotone f on [3]^3 is at most k sqrt(d)."""
    rng = np.random.default_rng(seed)
    dom = grid(3, 3)
    fails, bad = 0, []
    for _ in range(count):
        k = int(rng.integers(1, 4))
        b = gen_random_k_monotone(dom, k, int(rng.integers(1 << 62)), certify_fn=False,
                                  inflate=False)
        total = influence(b.table, dom)[1]
        if total > k * math.sqrt(3) + 1e-12:
            fails += 1
            bad.append({"k": k, "seed": b.seed, "influence": total})
    return _report("influence", count, fails, bad)


def check_l1_hamming(count=1000, seed=0):
    """L1 distance to monotone equals the Hamming distance of the threshold lift."""
    rng = np.random.default_rng(seed)
    fails, bad = 0, []
    shapes = ((line(5), 4), (line(4), 5), (grid(2, 2), 5), (line(10), 2), (grid(3, 2), 2))
    for _ in range(count):
        dom, m = shapes[int(rng.integers(len(shapes)))]
        vals = [Fraction(int(v), m) for v in rng.integers(0, m + 1, dom.size)]
        f = RealFunction.from_values(dom, vals, m)
        if not l1_equals_hamming_check(f, m):
            fails += 1
            bad.append({"domain": dom.to_json(), "values": [str(v) for v in vals]})
    return _report("l1-hamming", count, fails, bad)


def check_rounding(count=300, seed=0):
    """Rounding up to multiples of 1/m moves the L1 distance by at most 1/m."""
    rng = np.random.default_rng(seed)
    fails, bad = 0, []
    for _ in range(count):
        n, m = int(rng.integers(2, 9)), int(rng.integers(1, 6))
        vals = [Fraction(int(a), 12) for a in rng.integers(0, 13, n)]
        f = RealFunction.from_values(line(n), vals, 12)
        gap = abs(l1_distance_monotone(f) - l1_distance_monotone(round_m(f, m)))
        if gap > Fraction(1, m):
            fails += 1
            bad.append({"values": [str(v) for v in vals], "m": m})
    return _report("rounding", count, fails, bad)


def check_truncation(count=200, seed=0):
    """Cube truncation (0 below, k mod 2 above) keeps k-monotone functions k-monotone."""
    rng = np.random.default_rng(seed)
    fails, bad = 0, []
    for _ in range(count):
        d, k = int(rng.integers(3, 7)), int(rng.integers(1, 4))
        f = gen_random_k_monotone(cube(d), k, int(rng.integers(1 << 62)), certify_fn=False).table
        lo = int(rng.integers(0, d + 1))
        hi = int(rng.integers(lo, d + 1))
        w = MiddleWindow(d, lo, hi, 0, 1.0)
        t = [truncated_value(int(f[x]), bin(x).count("1"), w, k) for x in range(1 << d)]
        if not is_k_monotone(np.array(t), k, cube(d)):
            fails += 1
            bad.append({"d": d, "k": k, "window": [lo, hi]})
    return _report("truncation", count, fails, bad)


def check_matching(count=300, seed=0):
    """|M|/N <= distance <= (k+1)|M|/N for the greedy maximal matching."""
    rng = np.random.default_rng(seed)
    fails, bad = 0, []
    for _ in range(count):
        dom = (grid(3, 2), cube(3), cube(4), grid(4, 2))[int(rng.integers(4))]
        k = int(rng.integers(1, 3))
        t = rng.integers(0, 2, dom.size)
        _, lb = greedy_violation_matching(t, k, dom)
        ex = exact_distance_bruteforce(t, k, dom).value
        if not lb.value <= ex <= (k + 1) * lb.value:
            fails += 1
            bad.append({"domain": dom.to_json(), "k": k, "table": t.tolist()})
    return _report("matching", count, fails, bad)


def check_extendability(count=300, seed=0):
    """Every k-monotone partial assignment extends to a total k-monotone function."""
    rng = np.random.default_rng(seed)
    fails, bad = 0, []
    done = 0
    while done < count:
        dom = (grid(3, 2), cube(3))[int(rng.integers(2))]
        k = int(rng.integers(1, 3))
        X = np.flatnonzero(rng.random(dom.size) < 0.5)
        part = {int(x): int(rng.integers(0, 2)) for x in X}
        try:
            out = extend_partial(dom, part, k)
        except PreconditionViolated:
            continue  # not k-monotone on X
        done += 1
        if not is_k_monotone(out, k, dom) or any(out[x] != v for x, v in part.items()):
            fails += 1
            bad.append({"domain": dom.to_json(), "k": k, "partial": part})
    return _report("extendability", count, fails, bad)


def check_line_oracles(count=0, seed=0):
    """DP distance equals brute force on every table over [n], n <= 8, k <= 3."""
    cases = fails = 0
    bad = []
    for n in range(1, 9):
        for mask in range(1 << n):
            t = np.array([(mask >> i) & 1 for i in range(n)])
            for k in (1, 2, 3):
                cases += 1
                a = exact_distance_line_dp(t, k, line(n)).value
                b = exact_distance_bruteforce(t, k, line(n)).value
                if a != b or (a == 0) != is_k_monotone(t, k, line(n)):
                    fails += 1
                    bad.append({"n": n, "k": k, "mask": mask})
    return _report("line-oracles", cases, fails, bad)


SUITES = {
    "coarsening": check_coarsening,
    "influence": check_influence,
    "l1-hamming": check_l1_hamming,
    "rounding": check_rounding,
    "truncation": check_truncation,
    "matching": check_matching,
    "extendability": check_extendability,
    "line-oracles": check_line_oracles,
}


def run_suite(name: str, count: int | None = None, seed: int = 0) -> dict:
    fn = SUITES[name]
    return fn(seed=seed) if count is None else fn(count=count, seed=seed)

