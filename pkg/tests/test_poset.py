import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import brute
from kmono.errors import BudgetExceeded, PreconditionViolated
from kmono.poset import (Domain, Oracle, cube, exact_distance, exact_distance_bruteforce,
                         exact_distance_line_dp, exact_distance_monotone, extend_partial, grid,
                         greedy_violation_matching, is_k_monotone, is_violation, k_monotone_masks,
                         line, longest_alternating_chain, max_violation_matching_exact,
                         min_vertex_cover_bruteforce, violation_chain, violation_hyperedges)


def test_encoding_roundtrip():
    for dom in (line(7), grid(3, 3), cube(5), grid(4, 2)):
        for i in range(dom.size):
            assert dom.encode(dom.decode(i)) == i
        assert np.array_equal(dom.coords()[5 % dom.size], dom.decode(5 % dom.size))


def test_coordinate_one_is_least_significant():
    dom = grid(3, 2)
    assert dom.encode((1, 0)) == 1
    assert dom.encode((0, 1)) == 3
    assert dom.view(np.arange(9))[1, 0] == 1


def test_oracle_counts_queries():
    o = Oracle(line(5), [0, 1, 1, 0, 1])
    assert o.query(1) == 1 and o.query(1) == 1
    assert o.queries == 2
    o.many([0, 1, 2])
    assert o.queries == 5


def test_trivial_k_monotone_examples():
    assert is_k_monotone(np.zeros(5), 1)
    assert not is_k_monotone([1, 0, 1, 0], 3)
    assert is_k_monotone([1, 0, 1, 0], 4)
    assert longest_alternating_chain(np.ones(7)) == 1
    assert longest_alternating_chain([0, 1, 0]) == 2


def test_anti_parity_on_square():
    # 00 -> 01 -> 11 carries 1,0,1, so anti-parity is neither 1- nor 2-monotone
    f = np.array([1, 0, 0, 1])
    dom = cube(2)
    assert longest_alternating_chain(f, dom) == 3
    assert not is_k_monotone(f, 1, dom)
    assert not is_k_monotone(f, 2, dom)
    assert is_k_monotone(f, 3, dom)
    chains = brute.all_chains(2, 2)
    assert brute.longest_alternating(f, chains) == 3


def test_alternating_chain_matches_enumeration_on_small_posets():
    rng = np.random.default_rng(0)
    for n, d in ((3, 2), (2, 4), (4, 2), (2, 3), (6, 1)):
        dom = grid(n, d) if n > 2 else cube(d)
        chains = brute.all_chains(n, d)
        for _ in range(60):
            f = rng.integers(0, 2, dom.size)
            assert longest_alternating_chain(f, dom) == brute.longest_alternating(f, chains)


def test_fs_on_cube4_chain_length():
    from kmono.adversaries import anti_parity_table
    dom = cube(4)
    f = anti_parity_table(4, (1, 2))
    assert longest_alternating_chain(f, dom) == brute.longest_alternating(f, brute.all_chains(2, 4))


def test_violation_chain_is_genuine():
    rng = np.random.default_rng(1)
    for dom in (grid(4, 2), cube(4), grid(3, 3), line(12)):
        for _ in range(50):
            f = rng.integers(0, 2, dom.size)
            for k in (1, 2, 3):
                ch = violation_chain(f, k, dom)
                if is_k_monotone(f, k, dom):
                    assert ch is None
                else:
                    assert is_violation(dom, f, ch, k)


def test_line_dp_examples():
    assert exact_distance_line_dp([0, 0, 1, 1, 1], 1).value == 0
    assert exact_distance_line_dp([1, 0], 1).value == Fraction(1, 2)
    assert exact_distance_line_dp([1, 0, 1, 0, 1, 0], 2).value == Fraction(1, 3)


def test_bruteforce_examples():
    assert exact_distance_bruteforce([1, 0, 0, 1], 1, cube(2)).value == Fraction(1, 4)
    assert exact_distance_bruteforce(np.zeros(9), 2, grid(3, 2)).value == 0
    assert exact_distance_bruteforce([1, 0], 1).value == Fraction(1, 2)


def test_line_dp_equals_flip_enumeration_exhaustive_small():
    for n in range(1, 8):
        chains = brute.all_chains(n, 1)
        for f in brute.tables(n):
            for k in (1, 2, 3):
                want = brute.flip_distance(f, k, chains)
                assert exact_distance_line_dp(f, k).value == Fraction(want, n)


def test_bruteforce_equals_naive_flip_enumeration_on_grids():
    rng = np.random.default_rng(2)
    for n, d in ((3, 2), (2, 3), (2, 4)):
        dom = grid(n, d) if n > 2 else cube(d)
        chains = brute.all_chains(n, d)
        for _ in range(25 if dom.size < 16 else 5):
            f = rng.integers(0, 2, dom.size)
            for k in (1, 2):
                want = brute.flip_distance(f, k, chains)
                assert exact_distance_bruteforce(f, k, dom).value == Fraction(want, dom.size)


def test_distance_equals_min_vertex_cover():
    rng = np.random.default_rng(3)
    for n, d in ((3, 2), (2, 3), (8, 1)):
        dom = grid(n, d) if n > 2 else cube(d)
        chains = brute.all_chains(n, d)
        for _ in range(30):
            f = rng.integers(0, 2, dom.size)
            for k in (1, 2):
                edges = brute.violating_edges(f, k, chains)
                assert sorted(violation_hyperedges(f, k, dom)) == edges
                vc = min_vertex_cover_bruteforce(edges, dom.size)
                assert exact_distance(f, k, dom).value == Fraction(vc, dom.size)


def test_monotone_matching_engine_agrees_with_bruteforce():
    rng = np.random.default_rng(4)
    for dom in (grid(4, 2), cube(4), grid(3, 2), grid(2, 3)):
        for _ in range(40):
            f = rng.integers(0, 2, dom.size)
            assert exact_distance_monotone(f, dom) == exact_distance_bruteforce(f, 1, dom)


def test_enumerated_class_sizes():
    # monotone Boolean functions: 4 on a 3-chain, 6 on [2]^2, 20 on {0,1}^3, 168 on {0,1}^4
    assert len(k_monotone_masks(line(3), 1)) == 4
    assert len(k_monotone_masks(cube(2), 1)) == 6
    assert len(k_monotone_masks(cube(3), 1)) == 20
    assert len(k_monotone_masks(cube(4), 1)) == 168
    assert len(k_monotone_masks(line(5), 5)) == 32


def test_budget_guards():
    with pytest.raises(BudgetExceeded):
        exact_distance_bruteforce(np.zeros(25), 1)
    with pytest.raises(BudgetExceeded):
        max_violation_matching_exact(np.zeros(13), 1)


def test_greedy_matching_examples():
    m, lb = greedy_violation_matching([0, 0, 1, 1], 1)
    assert m == [] and lb.value == 0
    m, lb = greedy_violation_matching([1, 0], 1)
    assert m == [(0, 1)] and lb.value == Fraction(1, 2)
    m, lb = greedy_violation_matching([1, 0, 1, 0, 1, 0], 2)
    assert len(m) == 1 and lb.value == Fraction(1, 6)
    assert lb.value <= exact_distance_line_dp([1, 0, 1, 0, 1, 0], 2).value <= 3 * lb.value


def test_greedy_matching_is_disjoint_valid_and_sandwiches_distance():
    rng = np.random.default_rng(5)
    for dom in (grid(4, 2), cube(4), grid(3, 3), line(14), grid(5, 2)):
        for _ in range(30):
            f = rng.integers(0, 2, dom.size)
            for k in (1, 2, 3):
                m, lb = greedy_violation_matching(f, k, dom)
                used = [x for e in m for x in e]
                assert len(used) == len(set(used))
                assert all(is_violation(dom, f, e, k) for e in m)
                if dom.size <= 24:
                    eps = exact_distance(f, k, dom).value
                    assert lb.value <= eps <= (k + 1) * lb.value


def test_greedy_matching_is_maximal():
    rng = np.random.default_rng(6)
    for dom in (grid(3, 2), cube(3), line(9)):
        chains = brute.all_chains(dom.n, dom.d)
        for _ in range(30):
            f = rng.integers(0, 2, dom.size)
            for k in (1, 2):
                m, _ = greedy_violation_matching(f, k, dom)
                used = {x for e in m for x in e}
                for e in brute.violating_edges(f, k, chains):
                    assert used & set(e)


def test_max_matching_examples():
    assert max_violation_matching_exact(np.ones(5), 1) == 0
    assert max_violation_matching_exact([1, 0, 1, 0], 1) == 2


def test_max_matching_bound_on_small_grid():
    rng = np.random.default_rng(7)
    dom = grid(3, 2)
    for _ in range(200):
        f = rng.integers(0, 2, 9)
        for k in (1, 2):
            eps = exact_distance(f, k, dom).value
            assert max_violation_matching_exact(f, k, dom) >= eps * 9 / (k + 1)


def test_extend_partial_examples():
    f = np.array([0, 1, 1, 0, 1, 1, 1, 1, 1], dtype=np.uint8)
    dom = grid(3, 2)
    if is_k_monotone(f, 2, dom):
        assert np.array_equal(extend_partial(dom, dict(enumerate(f)), 2), f)
    out = extend_partial(line(3), {0: 1, 2: 0}, 2)
    assert tuple(out) in {(1, 0, 0), (1, 1, 0)}
    with pytest.raises(PreconditionViolated):
        extend_partial(line(3), {0: 1, 2: 0}, 1)


@pytest.mark.parametrize("dom", [grid(3, 2), cube(3)], ids=["3x3", "cube3"])
def test_extend_partial_exhaustive(dom):
    N = dom.size
    for k in (1, 2):
        for r in range(N + 1):
            for X in itertools.combinations(range(N), r):
                for bits in itertools.product((0, 1), repeat=r):
                    part = dict(zip(X, bits))
                    try:
                        out = extend_partial(dom, part, k)
                    except PreconditionViolated:
                        continue
                    assert all(out[x] == v for x, v in part.items())
                    assert is_k_monotone(out, k, dom)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=12), st.integers(1, 4))
def test_property_checker_monotone_in_k(bits, k):
    f = np.array(bits)
    if is_k_monotone(f, k):
        assert is_k_monotone(f, k + 1)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=12), st.integers(1, 3))
def test_property_zero_distance_iff_k_monotone(bits, k):
    f = np.array(bits)
    d = exact_distance_line_dp(f, k).value
    assert (d == 0) == is_k_monotone(f, k)
    assert (d == 0) == (not violation_hyperedges(f, k))
    assert 0 <= d <= 1


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 16 - 1), st.integers(1, 3))
def test_property_grid_zero_distance_iff_k_monotone(mask, k):
    dom = grid(4, 2)
    f = np.array([(mask >> i) & 1 for i in range(16)])
    d = exact_distance_bruteforce(f, k, dom).value
    assert (d == 0) == is_k_monotone(f, k, dom)


@pytest.mark.parametrize("dom", [grid(4, 2), grid(3, 2), grid(2, 3), cube(4)],
                         ids=["4x4", "3x3", "2^3", "cube4"])
def test_milp_distance_matches_bruteforce(dom):
    from kmono.poset import exact_distance_bruteforce, exact_distance_milp
    rng = np.random.default_rng(dom.size)
    for _ in range(15):
        t = rng.integers(0, 2, dom.size)
        for k in (1, 2, 3):
            assert exact_distance_milp(t, k, dom).value == exact_distance_bruteforce(t, k, dom).value


def test_milp_distance_matches_matching_at_k1():
    from kmono.poset import exact_distance_milp, exact_distance_monotone
    dom = grid(16, 2)
    t = (np.random.default_rng(3).random(dom.size) < 0.5).astype(np.uint8)
    assert exact_distance_milp(t, 1, dom).value == exact_distance_monotone(t, dom).value
