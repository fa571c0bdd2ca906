import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scwiretap.ensembles import EnsembleParams
from scwiretap.errors import Indivisible, InvalidParams, OutOfRange, TooLarge
from scwiretap.graphs import sample_uncoupled
from scwiretap.rng import make_rng
from scwiretap.stopping import (
    GrowthRateQuery,
    _lhs,
    binary_entropy,
    enumerate_stopping_sets,
    first_zero,
    growth_rate,
    growth_rate_standard,
    log_p,
    mean_enumerator_exact,
    p_poly,
    solve_t,
)

from oracles import is_stopping_set_with_multiplicity


def test_p_poly_examples():
    assert p_poly(6, 0) == 1.0
    assert p_poly(3, 1) == 5.0
    assert p_poly(6, 0.5) == 8.390625
    assert math.exp(log_p(6, 0.5)) == pytest.approx(8.390625, rel=1e-14)
    assert log_p(30, 1e-9) == pytest.approx(math.log1p(435e-18), rel=1e-12)
    assert log_p(12, 1e6) == pytest.approx(math.log(p_poly(12, 1e6)), rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 40), st.floats(1e-6, 1 - 1e-6))
def test_solve_t_residual(r, w):
    t = solve_t(r, w)
    assert abs(_lhs(r, t) - w) < 1e-10
    with_mp = t * ((1 + t) ** (r - 1) - 1) / p_poly(r, t) if t < 1e10 else w
    assert abs(with_mp - w) < 1e-9


def test_solve_t_examples():
    for w in (0.1, 0.3, 0.77):
        assert solve_t(2, w) == pytest.approx(math.sqrt(w / (1 - w)), rel=1e-12)
    assert solve_t(6, 1e-8) < 1e-3
    t = solve_t(6, 0.3)
    assert abs(t * ((1 + t) ** 5 - 1) / ((1 + t) ** 6 - 6 * t) - 0.3) < 1e-10
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(OutOfRange):
            solve_t(6, bad)


def test_solve_t_beyond_r_minus_one_over_r():
    # the left side approaches 1, so omega above (r-1)/r still has a root
    t = solve_t(6, 0.9)
    assert abs(_lhs(6, t) - 0.9) < 1e-12


def test_query_validation():
    with pytest.raises(InvalidParams):
        GrowthRateQuery(3, 3, 6, 0.1)  # zero design rate
    with pytest.raises(OutOfRange):
        GrowthRateQuery(3, 3, 12, 1.0)
    assert not GrowthRateQuery(2, 1, 6, 0.1).has_linear_distance
    assert GrowthRateQuery(3, 3, 12, 0.1).has_linear_distance


@pytest.mark.parametrize("l1,l2,r", [(1, 2, 6), (2, 1, 6), (3, 3, 12), (4, 1, 9)])
def test_split_invariance(l1, l2, r):
    for w in np.linspace(0.005, 0.99, 40):
        a = growth_rate(GrowthRateQuery(l1, l2, r, float(w)))
        b = growth_rate_standard(l1 + l2, r, float(w))
        assert a == pytest.approx(b, abs=1e-9)


def test_growth_rate_sign_and_limits():
    assert growth_rate(GrowthRateQuery(3, 3, 12, 0.01)) < 0
    assert abs(growth_rate(GrowthRateQuery(3, 3, 12, 1e-9))) < 1e-6
    ws = first_zero(3, 3, 12)
    assert 0 < ws < 0.5
    assert growth_rate(GrowthRateQuery(3, 3, 12, ws)) == pytest.approx(0, abs=1e-10)
    # the regular (3,6) value of the relative minimum stopping distance
    assert first_zero(1, 2, 6) == pytest.approx(0.018, abs=5e-4)


def test_binary_entropy():
    assert binary_entropy(0.5) == pytest.approx(math.log(2))
    assert binary_entropy(0.0) == 0.0


def test_mean_enumerator_small_cases():
    assert mean_enumerator_exact(3, 3, 6, 12, 0) == 1
    assert mean_enumerator_exact(3, 0, 6, 4, 2) == mean_enumerator_exact(3, 0, 6, 4, 2)
    # one type-3 check of degree 3 fed by n=3 single-edge variables
    assert mean_enumerator_exact(1, 0, 3, 3, 1) == 0
    assert mean_enumerator_exact(1, 0, 3, 3, 2) == 3
    with pytest.raises(Indivisible):
        mean_enumerator_exact(3, 3, 6, 5, 1)


def test_single_type_reduction_matches_direct_formula():
    l, r, n = 3, 6, 8
    m = n * l // r
    for a in range(n + 1):
        # coefficient of x^{al} in p(x)^m by brute expansion over check choices
        coef = 0
        for choice in itertools.product(range(r + 1), repeat=m):
            if sum(choice) == a * l and all(c != 1 for c in choice):
                coef += math.prod(math.comb(r, c) for c in choice)
        expected = Fraction(math.comb(n, a) * coef, math.comb(n * l, a * l))
        assert mean_enumerator_exact(l, 0, r, n, a) == expected


def test_enumerator_growth_trend():
    rate = growth_rate(GrowthRateQuery(1, 2, 6, 0.25))
    gaps = []
    for n in (48, 96, 192):
        val = mean_enumerator_exact(1, 2, 6, n, n // 4)
        gaps.append(abs(math.log(val) / n - rate))
    assert gaps[0] > gaps[1] > gaps[2]


def test_enumerate_matches_bruteforce():
    rng = make_rng(1)
    for _ in range(30):
        g = sample_uncoupled(EnsembleParams(2, 2, 4, 4), 8, rng)
        checks = [list(nb) for nb in g.type1] + [list(nb) for nb in g.type2]
        brute = np.zeros(9, np.int64)
        for k in range(9):
            for sub in itertools.combinations(range(8), k):
                brute[k] += is_stopping_set_with_multiplicity(checks, sub)
        assert np.array_equal(enumerate_stopping_sets(g), brute)
    assert enumerate_stopping_sets(g, 3).tolist() == brute[:4].tolist()
    assert enumerate_stopping_sets(g)[0] == 1


def test_enumerate_no_single_variable_sets_without_multi_edges():
    rng = make_rng(2)
    for _ in range(50):
        g = sample_uncoupled(EnsembleParams(3, 3, 6, 12), 12, rng)
        simple = all(len(set(nb)) == len(nb) for j in (1, 2) for nb in g.block(j))
        if simple:
            assert enumerate_stopping_sets(g, 1)[1] == 0


def test_enumerate_too_large():
    g = sample_uncoupled(EnsembleParams(3, 3, 6, 6), 30, make_rng(3))
    with pytest.raises(TooLarge):
        enumerate_stopping_sets(g)
