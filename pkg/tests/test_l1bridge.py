import functools
import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import brute
from kmono.errors import PreconditionViolated
from kmono.l1bridge import (LiftedOracle, RealFunction, RealOracle, best_monotone_labeling,
                            hamming_distance_monotone_rect, l1_distance_monotone,
                            l1_equals_hamming_check, l1_test_params, lift_shape, lift_table,
                            monotone_rect_tables, rect_is_monotone, round_m, threshold_lift,
                            tolerant_l1_test_monotone, unlift)
from kmono.poset import grid, line


def comparable_pairs(shape):
    """All pairs (p, q) with p <= q coordinatewise and p != q, as index pairs."""
    pts = [p[::-1] for p in itertools.product(*(range(L) for L in reversed(shape)))]
    strides = np.cumprod((1,) + tuple(shape[:-1]))
    idx = [int(np.dot(p, strides)) for p in pts]
    return [(idx[a], idx[b]) for a, p in enumerate(pts) for b, q in enumerate(pts)
            if a != b and all(x <= y for x, y in zip(p, q))]


def naive_rect_monotone(table, shape):
    return all(table[a] <= table[b] for a, b in comparable_pairs(shape))


@functools.lru_cache(maxsize=None)
def monotone_tables_naive(shape):
    """Every 0/1 table on the rectangle, filtered on every comparable pair."""
    N = math.prod(shape)
    allt = ((np.arange(1 << N)[:, None] >> np.arange(N)) & 1).astype(np.uint8)
    keep = np.ones(len(allt), dtype=bool)
    for a, b in comparable_pairs(shape):
        keep &= allt[:, a] <= allt[:, b]
    return allt[keep]


def naive_hamming(table, shape):
    mono = monotone_tables_naive(tuple(shape))
    return Fraction(int((mono != np.asarray(table)).sum(axis=1).min()), len(table))


def naive_l1(values, n, d, levels):
    """min over monotone h with values among ``levels`` of mean |f - h|."""
    if d == 1:
        # non-decreasing sequences over sorted levels, by a DP on the last level
        levels = sorted(levels)
        best = [abs(values[0] - v) for v in levels]
        for y in values[1:]:
            run = None
            nxt = []
            for j, v in enumerate(levels):
                run = best[j] if run is None or best[j] < run else run
                nxt.append(run + abs(y - v))
            best = nxt
        return min(best) / n
    pts = brute.points(n, d)
    order = [(brute.index(p, n), [brute.index(q, n) for q in pts if brute.below(q, p)])
             for p in pts]
    best = None
    for h in itertools.product(levels, repeat=len(pts)):
        if all(h[y] <= h[x] for x, below in order for y in below):
            s = sum(abs(a - b) for a, b in zip(h, values))
            best = s if best is None or s < best else best
    return best / len(pts)


def random_grid_function(dom, m, rng):
    return RealFunction(dom, rng.integers(0, m + 1, dom.size), m)


# ---------------------------------------------------------------------------
# lift and rounding


def test_threshold_lift_examples():
    assert threshold_lift(0.7, 0.2) == 0
    assert threshold_lift(0.7, 0.4) == 1
    assert all(threshold_lift(1, Fraction(i, 10)) == 1 for i in range(1, 11))
    with pytest.raises(ValueError):
        threshold_lift(0.5, 0)


def test_threshold_lift_monotone_in_t():
    for v in [Fraction(i, 7) for i in range(8)]:
        bits = [threshold_lift(v, Fraction(i, 20)) for i in range(1, 21)]
        assert bits == sorted(bits)


@pytest.mark.parametrize("m", [1, 2, 3, 5, 8])
def test_lift_layers_average_to_f(m):
    dom = line(m + 1)
    f = RealFunction(dom, np.arange(m + 1), m)
    layers = lift_table(f, m).reshape(m, dom.size)
    assert np.all(layers.sum(axis=0) == f.num)
    for x, v in enumerate(f.values()):
        assert layers[0, x] == int(v == 1)
        for i in range(1, m):
            assert layers[i, x] == threshold_lift(v, Fraction(i, m))


def test_naive_sum_over_rm_overcounts():
    # with t ranging over {1/m, ..., 1} and ">=", a value j < m lights j+1 layers
    m = 4
    for j in range(m):
        v = Fraction(j, m)
        assert sum(threshold_lift(v, Fraction(i, m)) for i in range(1, m + 1)) == j + 1


@pytest.mark.parametrize("m", [1, 2, 3])
def test_monotonicity_transfer_exhaustive(m):
    dom = line(3)
    for vals in itertools.product(range(m + 1), repeat=3):
        f = RealFunction(dom, vals, m)
        mono = all(a <= b for a, b in zip(vals, vals[1:]))
        lifted = lift_table(f, m)
        assert naive_rect_monotone(lifted, lift_shape(dom, m)) == mono
        assert rect_is_monotone(lifted, lift_shape(dom, m)) == mono


def test_unlift_roundtrip():
    rng = np.random.default_rng(0)
    for m in (1, 3, 6):
        f = random_grid_function(grid(3, 2), m, rng)
        assert np.array_equal(unlift(lift_table(f, m), f.domain, m).num, f.num)


def test_round_m_examples():
    f = RealFunction.from_values(line(1), [0.3])
    assert round_m(f, 4).values() == [Fraction(1, 2)]
    g = RealFunction(line(5), [0, 1, 2, 3, 4], 4)
    assert np.array_equal(round_m(g, 4).num, g.num)
    assert round_m(RealFunction.from_values(line(1), [0]), 3).values() == [0]


@settings(max_examples=300, deadline=None)
@given(st.lists(st.fractions(min_value=0, max_value=1, max_denominator=50), min_size=1,
                max_size=12), st.integers(1, 12))
def test_round_m_properties(vals, m):
    f = RealFunction.from_values(line(len(vals)), vals)
    r = round_m(f, m)
    assert np.array_equal(round_m(r, m).num, r.num)
    for v, w in zip(vals, r.values()):
        assert w == Fraction(math.ceil(v * m), m)
        assert 0 <= w - v < Fraction(1, m)


def test_float_values_read_as_decimals():
    f = RealFunction.from_values(line(3), [0.7, 0.25, 1.0])
    assert f.values() == [Fraction(7, 10), Fraction(1, 4), 1]
    assert round_m(f, 10).values()[0] == Fraction(7, 10)


def test_json_roundtrip():
    f = RealFunction.from_values(grid(2, 2), ["1/3", "2/5", 0, 1])
    g = RealFunction.from_json(f.to_json())
    assert g.q == f.q == 15 and np.array_equal(g.num, f.num)
    with pytest.raises(ValueError):
        RealFunction.from_values(line(1), ["3/2"])


# ---------------------------------------------------------------------------
# exact distances


@pytest.mark.parametrize("shape", [(4,), (1, 5), (5, 1), (3, 4), (4, 3), (2, 2, 3), (2, 3, 3)])
def test_best_labeling_matches_bruteforce(shape):
    rng = np.random.default_rng(len(shape) * 10 + shape[0])
    N = math.prod(shape)
    tables = list(monotone_tables_naive(shape))
    assert sorted(map(tuple, monotone_rect_tables(shape))) == sorted(map(tuple, tables))
    for _ in range(30):
        c0, c1 = rng.random(N), rng.random(N)
        want = min(float(np.where(t == 1, c1, c0).sum()) for t in tables)
        got, lab = best_monotone_labeling(c0, c1, shape)
        assert got == pytest.approx(want)
        assert naive_rect_monotone(lab, shape)
        assert float(np.where(lab == 1, c1, c0).sum()) == pytest.approx(want)


def test_hamming_rect_matches_bruteforce():
    rng = np.random.default_rng(1)
    for shape in [(3, 4), (6, 2), (2, 2, 2)]:
        for _ in range(20):
            t = rng.integers(0, 2, math.prod(shape)).astype(np.uint8)
            assert hamming_distance_monotone_rect(t, shape) == naive_hamming(t, shape)


def test_l1_example_and_monotone():
    f = RealFunction.from_values(line(2), [1, 0])
    assert l1_distance_monotone(f) == Fraction(1, 2)
    assert hamming_distance_monotone_rect(lift_table(f, 1), (2, 1)) == Fraction(1, 2)
    assert l1_equals_hamming_check(f, 1)
    g = RealFunction(line(4), [0, 1, 1, 3], 3)
    assert l1_distance_monotone(g) == 0
    assert hamming_distance_monotone_rect(lift_table(g, 3), (4, 3)) == 0


def test_l1_line_matches_enumeration():
    rng = np.random.default_rng(2)
    for _ in range(100):
        vals = [Fraction(int(a), 12) for a in rng.integers(0, 13, 6)]
        f = RealFunction.from_values(line(6), vals, 12)
        assert l1_distance_monotone(f) == naive_l1(vals, 6, 1, sorted(set(vals)))


def test_l1_grid_matches_enumeration():
    rng = np.random.default_rng(3)
    for _ in range(30):
        f = random_grid_function(grid(2, 2), 4, rng)
        vals = f.values()
        assert l1_distance_monotone(f) == naive_l1(vals, 2, 2, sorted(set(vals)))


@pytest.mark.parametrize("m", [2, 4])
def test_rounding_moves_distance_by_at_most_1_over_m(m):
    rng = np.random.default_rng(m)
    for _ in range(200):
        vals = [Fraction(int(a), 97) for a in rng.integers(0, 98, 8)]
        f = RealFunction.from_values(line(8), vals, 97)
        r = round_m(f, m)
        d_f = l1_distance_monotone(f)
        d_r = l1_distance_monotone(r)
        assert abs(d_f - d_r) <= Fraction(1, m)
        assert d_f == naive_l1(vals, 8, 1, sorted(set(vals)))


SMALL = [(line(n), m) for n in range(1, 6) for m in range(1, 5) if n * m <= 20] + \
        [(grid(2, 2), m) for m in (1, 2, 3, 4, 5)] + [(grid(3, 2), 2), (grid(2, 3), 2)]


def test_l1_equals_hamming_random_instances():
    rng = np.random.default_rng(4)
    count = 0
    for trial in range(1000):
        dom, m = SMALL[trial % len(SMALL)]
        f = random_grid_function(dom, m, rng)
        assert l1_equals_hamming_check(f, m)
        count += 1
    assert count == 1000


def test_l1_equals_hamming_against_naive_sides():
    rng = np.random.default_rng(5)
    for trial in range(60):
        dom, m = SMALL[trial % len(SMALL)]
        f = random_grid_function(dom, m, rng)
        levels = [Fraction(j, m) for j in range(m + 1)]
        real = naive_l1(f.values(), dom.n, dom.d, levels)
        assert real == naive_hamming(lift_table(f, m), lift_shape(dom, m))


def test_check_requires_grid_values():
    f = RealFunction(line(2), [1, 2], 3)
    with pytest.raises(PreconditionViolated):
        l1_equals_hamming_check(f, 2)


# ---------------------------------------------------------------------------
# tester


def real_line(vals, q=1000):
    return RealFunction(line(len(vals)), np.round(np.clip(vals, 0, 1) * q).astype(np.int64), q)


def test_params_example():
    p = l1_test_params(0.1, 0.5)
    assert p["m"] == 10
    assert p["eps1"] == pytest.approx(0.2) and p["eps2"] == pytest.approx(0.4)
    assert (p["eps2"] - p["eps1"]) >= (0.5 - 0.1) / 2 - 1e-12


def test_lifted_oracle_matches_table():
    rng = np.random.default_rng(6)
    f = RealFunction(grid(5, 2), rng.integers(0, 8, 25), 7)
    g = LiftedOracle(RealOracle(f), 4)
    want = lift_table(round_m(f, 4), 4)
    assert np.array_equal(g.many(np.arange(want.size)), want)
    assert g.queries == want.size


def line_instances(kind, rng, n=240):
    x = np.arange(n) / n
    if kind == "monotone":
        return real_line(np.sort(rng.random(n)))
    if kind == "ramp":
        return real_line(x)
    if kind == "close":
        v = np.sort(rng.random(n))
        hit = rng.random(n) < 0.08
        v[hit] = rng.random(hit.sum())
        return real_line(v)
    if kind == "far":
        v = np.where(x < 0.5, 1 - 0.06 * rng.random(n), 0.06 * rng.random(n))
        return real_line(v)
    raise ValueError(kind)


@pytest.mark.parametrize("kind", ["monotone", "ramp", "close"])
def test_full_engine_accepts_close(kind):
    rng = np.random.default_rng(7)
    for _ in range(2):
        f = line_instances(kind, rng)
        assert l1_distance_monotone(f) <= Fraction(5, 100)
        acc = sum(tolerant_l1_test_monotone(RealOracle(f), 0.05, 0.45, seed=s).decision
                  == "ACCEPT" for s in range(15))
        assert acc >= 10


def test_full_engine_rejects_certified_far():
    rng = np.random.default_rng(8)
    for _ in range(2):
        f = line_instances("far", rng)
        assert l1_distance_monotone(f) >= Fraction(45, 100)
        rej = sum(tolerant_l1_test_monotone(RealOracle(f), 0.05, 0.45, seed=s).decision
                  == "REJECT" for s in range(15))
        assert rej >= 10


def test_full_engine_query_count():
    f = line_instances("ramp", np.random.default_rng(0))
    v = tolerant_l1_test_monotone(RealOracle(f), 0.05, 0.45, seed=0)
    d = v.details
    assert d["blocks"] == (50, 10)
    assert v.queries == 500 * d["t"]
    assert d["t"] == math.ceil(25 * math.log(6 * 500) / (2 * d["alpha"] ** 2))


def test_agnostic_engine():
    f = line_instances("ramp", np.random.default_rng(0))
    with pytest.raises(PreconditionViolated):
        tolerant_l1_test_monotone(RealOracle(f), 0.05, 0.45, seed=0, engine="agnostic")
    acc = sum(tolerant_l1_test_monotone(RealOracle(f), 0, 0.9, seed=s,
                                        engine="agnostic").decision == "ACCEPT"
              for s in range(5))
    assert acc >= 4


def test_bad_arguments():
    f = line_instances("ramp", np.random.default_rng(0))
    with pytest.raises(PreconditionViolated):
        tolerant_l1_test_monotone(RealOracle(f), 0.5, 0.4)
    with pytest.raises(ValueError):
        tolerant_l1_test_monotone(RealOracle(f), 0.1, 0.4, engine="other")
