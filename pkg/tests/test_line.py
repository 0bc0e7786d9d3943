import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import brute
from kmono import line as L
from kmono.poset import Oracle, exact_distance_line_dp, is_k_monotone, is_violation, line


def staircase(n, cuts):
    f = np.zeros(n, dtype=np.uint8)
    for i, c in enumerate(sorted(cuts)):
        f[c:] = 1 - i % 2
    return f


def even_staircase(n, k, rng, jitter=0.5):
    lens = (1 + jitter * (2 * rng.random(k + 1) - 1))
    cuts = np.round(np.cumsum(lens)[:-1] * n / lens.sum()).astype(int)
    return staircase(n, cuts)


def gv(n, k, eps, rng):
    K = round(k / eps)
    v = (rng.random(K // 2) >= 6 * eps).astype(np.uint8)
    blocks = np.ones(K, dtype=np.uint8)
    blocks[0::2] = v
    return np.repeat(blocks, n // K)




def small_params(k, eps=1.0):
    return L.TesterParams(k, eps, k_mult=1.0, c_onesided=3.0, full_read_factor=0.0)


# one-sided tester

def test_one_sided_constant_accepts():
    for c in (0, 1):
        for s in range(20):
            assert L.test_line_one_sided(Oracle(line(5000), np.full(5000, c)), 3, 0.1, s).accepted


def test_one_sided_never_rejects_staircases():
    rng = np.random.default_rng(0)
    for s in range(300):
        k = int(rng.integers(1, 9))
        f = staircase(20000, rng.choice(np.arange(1, 20000), k, replace=False))
        assert L.test_line_one_sided(Oracle(line(20000), f), k, 0.1, s).accepted


def test_one_sided_exhaustive_small_never_rejects():
    # shrunken block and sample counts so that blocks hold several points
    for n in range(1, 15):
        T, dist = brute.all_line_distances(n, 3)
        for k in (1, 2, 3):
            for f in T[dist[:, k] == 0]:
                for s in range(100 if n <= 8 else 3):
                    v = L.test_line_one_sided(Oracle(line(n), f), k, 1.0, s, small_params(k))
                    assert v.accepted


def test_one_sided_witnesses_are_violations():
    rng = np.random.default_rng(1)
    rejections = 0
    for s in range(200):
        n = int(rng.integers(20, 300))
        f = (rng.random(n) < 0.5).astype(np.uint8)
        k = int(rng.integers(1, 4))
        p = L.TesterParams(k, 1.0, k_mult=4.0, c_onesided=4.0, full_read_factor=0.0)
        v = L.test_line_one_sided(Oracle(line(n), f), k, 1.0, s, p)
        if not v.accepted:
            rejections += 1
            assert len(v.witness) == k + 1
            assert is_violation(line(n), f, v.witness, k)
    assert rejections > 100


def test_one_sided_rejects_gv():
    rng = np.random.default_rng(2)
    n, k, eps = 48000, 8, 0.05
    f = gv(n, k, eps, rng)
    while exact_distance_line_dp(f, k).value < Fraction(1, 20):
        f = gv(n, k, eps, rng)
    rej = 0
    for s in range(60):
        v = L.test_line_one_sided(Oracle(line(n), f), k, eps, s)
        assert v.queries <= 200 * k / eps
        rej += not v.accepted
        if not v.accepted:
            assert is_violation(line(n), f, v.witness, k)
    assert rej >= 40


def test_one_sided_full_read_for_tiny_eps():
    f = staircase(100, [10, 20, 30])
    v = L.test_line_one_sided(Oracle(line(100), f), 2, 0.5, 0)
    assert v.reason == "full read" and v.queries == 100 and not v.accepted
    assert is_violation(line(100), f, v.witness, 2)


# dual distribution

def test_interval_masses_example():
    f = [1, 1, 1, 0, 0, 0, 0, 1, 1, 1, 1, 1]
    assert L.interval_masses(f) == [Fraction(1, 4), Fraction(1, 3), Fraction(5, 12)]
    assert L.interval_masses(np.ones(9)) == [Fraction(1)]


def test_sample_Df_frequencies():
    f = np.array([1, 1, 1, 0, 0, 0, 0, 1, 1, 1, 1, 1])
    dual = L.DualDistribution.of_oracle(Oracle(line(12), f))
    rng = np.random.default_rng(3)
    pos = rng.integers(0, 12, 100000)
    which = np.searchsorted([3, 7], pos, side="right")
    freq = np.bincount(which) / pos.size
    assert np.allclose(freq, [1 / 4, 1 / 3, 5 / 12], atol=0.01)
    h = L.sample_Df(dual, rng)
    assert h.value == f[h.position]
    const = L.DualDistribution.of_oracle(Oracle(line(7), np.zeros(7)))
    assert L.eval_Df_capped(const, L.sample_Df(const, rng), 10) == 1


def test_eval_capped_examples():
    n = 200
    f = staircase(n, [50, 53])
    dual = L.DualDistribution.of_oracle(Oracle(line(n), f))
    assert L.eval_Df_capped(dual, L.DfHandle(51, 1), 10) == Fraction(3, n)
    f = staircase(n, [50, 50 + 25])  # interval of length 2w+5 with w=10
    dual = L.DualDistribution.of_oracle(Oracle(line(n), f))
    assert L.eval_Df_capped(dual, L.DfHandle(62, 1), 10) == L.EXCEEDS_CAP


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=80), st.integers(1, 20), st.data())
def test_property_capped_eval(bits, w, data):
    f = np.array(bits, dtype=np.uint8)
    i = data.draw(st.integers(0, f.size - 1))
    o = Oracle(line(f.size), f)
    dual = L.DualDistribution.of_oracle(o)
    h = L.DfHandle(i, int(f[i]))
    out = L.eval_Df_capped(dual, h, w)
    starts = np.concatenate(([0], np.flatnonzero(np.diff(f)) + 1, [f.size]))
    j = np.searchsorted(starts, i, side="right") - 1
    a, b = starts[j], starts[j + 1] - 1
    assert dual.reads <= 2 * w
    if b - a + 1 <= w:
        assert out == Fraction(int(b - a + 1), f.size)
    if out == L.EXCEEDS_CAP:
        # a boundary lies outside the window
        assert b - a + 1 > w
        assert min(b + 1, f.size - 1) > i + w or max(a - 1, 0) < i - w
    else:
        assert out == Fraction(int(b - a + 1), f.size)
        assert min(b + 1, f.size - 1) <= i + w and max(a - 1, 0) >= i - w
    batch = L.eval_Df_capped_batch(L.DualDistribution.of_oracle(o.fresh()), [i], w)[0]
    assert batch == (-1 if out == L.EXCEEDS_CAP else out * f.size)


def test_estimator_unbiased_without_cap():
    rng = np.random.default_rng(4)
    for _ in range(50):
        f = rng.integers(0, 2, int(rng.integers(1, 40)))
        D = L.interval_masses(f)
        assert sum(D) == 1
        assert sum(p * (1 / p) for p in D) == len(D)


def test_support_estimate_uniform_over_8():
    f = np.array([1, 0] * 4, dtype=np.uint8)
    good = 0
    for s in range(100):
        dual = L.DualDistribution.of_oracle(Oracle(line(8), f))
        est = L.support_size_estimate(dual, 8, 0.25, 8, np.random.default_rng(s))
        good += 6 <= est <= 10
    assert good >= 90


def test_support_estimate_point_mass():
    dual = L.DualDistribution.of_oracle(Oracle(line(50), np.ones(50)))
    est = L.support_size_estimate(dual, 50, 0.1, 100, np.random.default_rng(0))
    assert est == 1


def test_cap_biases_downward_only():
    # one long interval of length 300 and 20 short ones of length 5
    f = staircase(400, [300 + 5 * i for i in range(20)])
    N = 400
    for s in range(20):
        d1 = L.DualDistribution.of_oracle(Oracle(line(N), f))
        d2 = L.DualDistribution.of_oracle(Oracle(line(N), f))
        capped = L.support_size_estimate(d1, N, 0.1, 20, np.random.default_rng(s), samples=500)
        full = L.support_size_estimate(d2, N, 0.1, N, np.random.default_rng(s), samples=500)
        assert capped <= full
        # only draws landing in the long interval lose their weight N/300
        assert full - capped <= N / 300 + 1e-9


# claims behind the two-sided tester

def test_relaxed_monotone_is_close_exhaustive():
    # a (1 + eps/4)k-monotone f is eps-close to k-monotone whenever eps k/4 >= 1
    for n in range(1, 15):
        T, dist = brute.all_line_distances(n, n)
        runs_from_one = np.array([brute.longest_alternating(t, [tuple(range(n))]) for t in T]) \
            if n <= 10 else None
        Ls = _alternation(T)
        if runs_from_one is not None:
            assert np.array_equal(Ls, runs_from_one)
        for k in range(4, n + 1):
            for eps in (0.25, 0.5, 0.75, 1.0):
                if eps * k / 4 < 1:
                    continue
                ell = math.floor((1 + eps / 4) * k)
                sel = Ls <= ell
                assert np.all(dist[sel, k] < eps * n)


def _alternation(T):
    """Longest alternating subsequence starting at 1, for every row of T."""
    changes = (np.diff(T, axis=1) != 0).sum(axis=1)
    has_one = T.max(axis=1) == 1
    first = T[:, 0]
    return np.where(has_one, changes + 1 - (first == 0), 0)


def test_support_gap_exhaustive():
    for n in range(1, 13):
        T, dist = brute.all_line_distances(n, n)
        runs = 1 + (np.diff(T, axis=1) != 0).sum(axis=1)
        for k in range(1, n + 1):
            assert np.all(runs[dist[:, k] == 0] <= k + 1)
            for eps in (0.25, 0.5, 1.0):
                if eps * k / 4 < 1:
                    continue
                far = dist[:, k] >= eps * n
                assert np.all(runs[far] > (1 + eps / 4) * k + 1)


# two-sided tester

def test_two_sided_delegates_for_small_k():
    f = staircase(5000, [100, 200])
    v = L.test_line_two_sided(Oracle(line(5000), f), 2, 0.2, 0)
    assert v.details.get("delegated") and v.accepted


def test_two_sided_small_run():
    rng = np.random.default_rng(5)
    n, k, eps = 20000, 40, 0.2
    ok = even_staircase(n, k, rng)
    far = even_staircase(n, 3 * k, rng)
    assert is_k_monotone(ok, k)
    assert exact_distance_line_dp(far, k).value >= Fraction(1, 5)
    acc_ok = sum(L.test_line_two_sided(Oracle(line(n), ok), k, eps, s, delegate=False).accepted
                 for s in range(12))
    acc_far = sum(L.test_line_two_sided(Oracle(line(n), far), k, eps, s, delegate=False).accepted
                  for s in range(12))
    assert acc_ok >= 9 and acc_far <= 3


def test_two_sided_queries_do_not_grow_with_k():
    rng = np.random.default_rng(6)
    n, eps = 20000, 0.2
    q = {}
    for k in (10, 40):
        f = even_staircase(n, k, rng)
        q[k] = np.mean([L.test_line_two_sided(Oracle(line(n), f), k, eps, s, delegate=False).queries
                        for s in range(5)])
    assert abs(q[10] - q[40]) <= 0.1 * q[40]


def test_params_validation():
    with pytest.raises(ValueError):
        L.TesterParams(0, 0.1)
    with pytest.raises(ValueError):
        L.TesterParams(1, 0)
    with pytest.raises(ValueError):
        L.TesterParams(1, 0.5, delta=1)
