import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scwiretap.density import (
    DEConfig,
    DEState,
    bp_threshold,
    bp_threshold_single,
    de_step,
    de_step_chain,
    de_step_single,
    de_step_smoothed,
    initial_state,
    run_de,
    run_de_single,
)
from scwiretap.ensembles import EnsembleParams, Variant
from scwiretap.errors import InvalidParams

from oracles import naive_chain_step, naive_smoothed_step

P216 = EnsembleParams(2, 1, 6, 6, L=16, w=3)
CHAIN = EnsembleParams(3, 3, 6, 12, L=20, variant=Variant.CHAIN)


def test_config_validation():
    with pytest.raises(InvalidParams):
        DEConfig(eps=1.5)
    with pytest.raises(InvalidParams):
        DEConfig(tol=0)


def test_eps_zero_gives_zero():
    for p in (P216, CHAIN):
        s = de_step(initial_state(p, 0.3), p, 0.0)
        assert s.max_erasure() == 0.0
        res = run_de(p, DEConfig(eps=0.0))
        assert res.converged_to_zero and res.iters == 1
    assert not de_step_single(np.full(33, 0.3), 3, 6, 16, 3, 0.0).any()


def test_eps_one_is_not_converging():
    res = run_de(P216, DEConfig(eps=1.0, max_iters=50))
    assert not res.converged_to_zero
    s = de_step(initial_state(P216, 1.0), P216, 1.0)
    assert s.x1[16] == 1.0


def test_scalar_hand_value():
    p = EnsembleParams(2, 1, 6, 6, L=0, w=1)
    s = de_step_smoothed(initial_state(p, 0.4), p, 0.4)
    expected = 0.4 * (1 - 0.6**5) ** 2
    assert s.x1[0] == pytest.approx(expected, rel=1e-15)
    assert s.x2[0] == pytest.approx(expected, rel=1e-15)
    # 0.6**5 = 0.07776, 0.92224**2 = 0.8505266..., times 0.4
    assert expected == pytest.approx(0.3402106470, abs=1e-10)
    assert de_step_single(np.array([0.4]), 3, 6, 0, 1, 0.4)[0] == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("p", [
    EnsembleParams(2, 1, 6, 6, L=4, w=3),
    EnsembleParams(3, 3, 6, 12, L=3, w=2),
    EnsembleParams(4, 0, 8, 8, L=2, w=4),
])
def test_smoothed_matches_explicit_sums(p):
    rng = np.random.default_rng(5)
    x1, x2 = rng.random(2 * p.L + 1), rng.random(2 * p.L + 1)
    s = de_step_smoothed(DEState(x1, x2, p.L), p, 0.37)
    n1, n2 = naive_smoothed_step(x1, x2, p.l1, p.l2, p.r1, p.r2, p.L, p.w, 0.37)
    np.testing.assert_allclose(s.x1, n1, rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(s.x2, n2, rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("p", [
    EnsembleParams(3, 3, 6, 12, L=3, variant=Variant.CHAIN),
    EnsembleParams(1, 3, 4, 6, L=2, variant=Variant.CHAIN),
    EnsembleParams(5, 1, 10, 3, L=4, variant=Variant.CHAIN),
])
def test_chain_matches_explicit_groups(p):
    rng = np.random.default_rng(6)
    x1 = rng.random((2 * p.L + 1, p.l1))
    x2 = rng.random((2 * p.L + 1, p.l2))
    s = de_step_chain(DEState(x1, x2, p.L), p, 0.61)
    n1, n2 = naive_chain_step(x1, x2, p.l1, p.l2, p.r1, p.r2, p.L, 0.61)
    np.testing.assert_allclose(s.x1, n1, rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(s.x2, n2, rtol=1e-13, atol=1e-15)


def test_unit_span_chain_is_uncoupled():
    # with one edge of each type there is no spreading, so every position runs
    # the uncoupled two-edge recursion, i.e. the w=1 smoothed system
    pc = EnsembleParams(1, 1, 3, 4, L=3, variant=Variant.CHAIN)
    ps = EnsembleParams(1, 1, 3, 4, L=3, w=1)
    sc, ss = initial_state(pc, 0.5), initial_state(ps, 0.5)
    for _ in range(20):
        sc, ss = de_step(sc, pc, 0.5), de_step(ss, ps, 0.5)
        np.testing.assert_allclose(sc.x1[:, 0], ss.x1, rtol=1e-14)
        np.testing.assert_allclose(sc.x2[:, 0], ss.x2, rtol=1e-14)


def test_two_edge_equals_single_bitwise():
    s = initial_state(P216, 0.45)
    x = np.full(33, 0.45)
    for _ in range(200):
        s = de_step(s, P216, 0.45)
        x = de_step_single(x, 3, 6, 16, 3, 0.45)
        assert np.array_equal(s.x1, x) and np.array_equal(s.x2, x)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(1, 4), st.integers(0, 6), st.floats(0.01, 1.0))
def test_equal_types_stay_equal(l1, l2, L, eps):
    r = l1 + l2 + 3
    w = min(3, max(1, 2 * L))
    p = EnsembleParams(l1, l2, r, r, L=L, w=w)
    rng = np.random.default_rng(L)
    x = rng.random(2 * L + 1)
    s = de_step_smoothed(DEState(x.copy(), x.copy(), L), p, eps)
    assert np.array_equal(s.x1, s.x2)


def test_symmetry_and_range():
    s = initial_state(CHAIN, 0.7)
    for _ in range(30):
        s = de_step(s, CHAIN, 0.7)
        assert s.x1.max() <= 0.7 and s.x1.min() >= 0
        # mirror: position i, offset a <-> position -i, offset l-1-a
        np.testing.assert_allclose(s.x1, s.x1[::-1, ::-1], rtol=1e-12)
    t = initial_state(P216, 0.47)
    for _ in range(30):
        t = de_step(t, P216, 0.47)
        np.testing.assert_allclose(t.x1, t.x1[::-1], rtol=1e-12)


def test_monotone_decrease_from_all_eps():
    s = initial_state(P216, 0.48)
    prev = s.x1
    for _ in range(300):
        s = de_step(s, P216, 0.48)
        assert np.all(s.x1 <= prev + 1e-16)
        prev = s.x1


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.integers(0, 2**31))
def test_monotone_in_state_and_eps(e1, e2, seed):
    lo_e, hi_e = min(e1, e2), max(e1, e2)
    rng = np.random.default_rng(seed)
    a = rng.random(9)
    b = np.minimum(1, a + rng.random(9) * 0.2)
    p = EnsembleParams(2, 1, 6, 6, L=4, w=3)
    lo = de_step_smoothed(DEState(a, a, 4), p, lo_e)
    hi = de_step_smoothed(DEState(b, b, 4), p, hi_e)
    assert np.all(lo.x1 <= hi.x1 + 1e-15)


def test_known_convergence_cases():
    assert run_de(P216, DEConfig(eps=0.45)).converged_to_zero
    assert run_de_single(3, 6, 16, 3, DEConfig(eps=0.45)).converged_to_zero
    assert not run_de(P216, DEConfig(eps=0.52)).converged_to_zero


def test_chain_three_three_six_twelve():
    # the full {3,3,6,12} chain has its BP threshold near 0.741, below 0.75
    ok = run_de(CHAIN, DEConfig(eps=0.73))
    bad = run_de(CHAIN, DEConfig(eps=0.75))
    assert ok.converged_to_zero
    assert not bad.converged_to_zero and bad.status == "fixed_point"


def test_zero_rate_threshold_is_one():
    p = EnsembleParams(3, 3, 6, 6, L=8, w=3)
    assert bp_threshold(p, DEConfig(), 1e-2) >= 0.99


def test_on_iter_callback():
    seen = []
    run_de(P216, DEConfig(eps=0.3), on_iter=lambda it, s: seen.append(it))
    assert seen == list(range(1, len(seen) + 1))


def test_single_matches_classic_scalar():
    x = np.array([0.42])
    for _ in range(10):
        nxt = de_step_single(x, 3, 6, 0, 1, 0.42)
        assert nxt[0] == pytest.approx(0.42 * (1 - (1 - x[0]) ** 5) ** 2, rel=1e-14)
        x = nxt


def test_threshold_bisection_agrees_coarse():
    a = bp_threshold(EnsembleParams(2, 1, 6, 6, L=8, w=3), DEConfig(), 1e-3)
    b = bp_threshold_single(3, 6, 8, 3, DEConfig(), 1e-3)
    assert a == b
