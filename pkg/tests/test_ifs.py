import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cifsdim.errors import BudgetExceeded, CifsdimError, PressureInfinite
from cifsdim.ifs.digits import DigitSet, _power_run_bound, _power_run_lower, nonexistence_sequence
from cifsdim.ifs.maps import ComposedGaussBranch, GaussBranch, Mobius, Similarity
from cifsdim.ifs.pressure import hausdorff_dim, naive_level_bracket, pressure
from cifsdim.ifs.symbolic import (contraction_norm, fixed_point_set, is_prefix_free, level_words, orbit_set,
                                  stopping_words, symbolic_covering_estimate, bounded_neighbourhood_count,
                                  gauss_fixed_point_cloud)
from cifsdim.ifs.system import gauss_cifs, similarity_system, system_from_json

from oracles import E12_DIMENSION, LOG2_LOG3, gauss_fixed_point, level_pressure, nonexistence_a


@pytest.fixture(scope="module")
def cantor():
    return similarity_system([Similarity(1 / 3, (0.0,)), Similarity(1 / 3, (2 / 3,))])


@pytest.fixture(scope="module")
def gauss12():
    return gauss_cifs(DigitSet.of([1, 2]))


# -- maps and systems ---------------------------------------------------------------

def test_mobius_composition_matches_function_composition():
    f, g = GaussBranch(3), ComposedGaussBranch(2)
    x = np.linspace(0, 1, 11)
    assert np.allclose(f.compose(g)(x), f(g(x)))
    assert ComposedGaussBranch(5).compose(GaussBranch(1)) == Mobius(5, 6, 6, 7, (1, 5, 1))


def test_digit_one_uses_composed_branches(gauss12):
    labels = sorted(m.label for m in gauss12.retained())
    assert labels == [(1, 1), (1, 2), (2,)]


def test_single_digit_two_fixed_point():
    system = gauss_cifs(DigitSet.of([2]))
    pts = fixed_point_set(system).points
    assert pts.shape == (1, 1)
    assert pts[0, 0] == pytest.approx(math.sqrt(2) - 1, abs=1e-15)


def test_rho_bracket_digit_two():
    system = gauss_cifs(DigitSet.of([2, 3]))
    lo, hi = contraction_norm(system, (0,))
    assert (lo, hi) == (pytest.approx(1 / 9), pytest.approx(1 / 4))


def test_improper_digit_sets():
    with pytest.raises(CifsdimError, match="improper digit set"):
        DigitSet.of([])
    with pytest.raises(CifsdimError, match="improper digit set"):
        DigitSet(bands=())


def test_gauss_fixed_points_deep_match_integer_oracle():
    digits = [16, 25, 4096, 2 ** 40 + 7]
    cloud = gauss_fixed_point_cloud(digits, deep=True)
    for b, m, e in zip(digits, cloud.deep.mantissa[:, 0], cloud.deep.exponent[:, 0]):
        exact = gauss_fixed_point(b)
        approx = m * 2.0 ** int(e)
        assert abs(approx - float(exact)) <= 2.0 ** -90 * float(exact) * 4


def test_similarity_rejects_bad_maps():
    with pytest.raises(CifsdimError):
        similarity_system([Similarity(1.2, (0.0,))])
    with pytest.raises(CifsdimError):
        similarity_system([Similarity(0.5, (0.7,))])


def test_json_round_trip(cantor, gauss12):
    for s in (cantor, gauss12):
        back = system_from_json(s.to_json())
        assert back.kind == s.kind
        assert len(back.retained()) == len(s.retained())


# -- digit sets -----------------------------------------------------------------------

def test_nonexistence_sequence():
    assert nonexistence_sequence(3) == [2, 4, 64, 2097152] == nonexistence_a(3)


@given(st.integers(1, 5000), st.integers(0, 3000), st.floats(1.1, 3.0))
def test_power_run_bounds_bracket_the_sum(k0, span, q):
    exact = math.fsum(k ** -q for k in range(k0, k0 + span + 1))
    assert _power_run_lower(k0, k0 + span, q) <= exact * (1 + 1e-12)
    assert exact <= _power_run_bound(k0, k0 + span, q) * (1 + 1e-12)


@given(st.integers(10, 400), st.floats(0.3, 1.0))
def test_tail_sums_bracket_brute_force(B, t):
    ds = DigitSet(bands=((1, 2000),), squares=True)
    exact = math.fsum(b ** (-2 * t) for b in ds.digits() if b > B)
    assert ds.tail_power_sum_lower(B, 2 * t) <= exact * (1 + 1e-12)
    assert exact <= ds.tail_power_sum(B, 2 * t) * (1 + 1e-12)


def test_digit_membership():
    ds = DigitSet(bands=((4, 8),), squares=True, cut=20)
    assert 25 in ds and 16 not in ds and 26 not in ds
    assert list(ds.digits()) == [25, 36, 49, 64]


# -- pressure -----------------------------------------------------------------------

def test_cantor_pressure_exact(cantor):
    p = pressure(cantor, 0.5)
    assert p.contains(math.log(2 * 3 ** -0.5))
    assert p.width < 1e-10


def test_cantor_dimension(cantor):
    b = hausdorff_dim(cantor, 1e-6)
    assert b.lo <= LOG2_LOG3 <= b.hi and b.width <= 1e-6


def test_gauss12_dimension_contains_reference(gauss12):
    b = hausdorff_dim(gauss12, 1e-5)
    assert b.lo <= E12_DIMENSION <= b.hi


@pytest.mark.parametrize("t", [0.3, 0.53, 0.8])
def test_gauss12_pressure_within_level_sum_oracle(gauss12, t):
    maps = [(m.a, m.b, m.c, m.d) for m in gauss12.retained()]
    lo, hi = level_pressure(maps, t, 10)
    p = pressure(gauss12, t)
    assert lo - 1e-9 <= p.lo and p.hi <= hi + 1e-9


def test_pressure_decreasing(gauss12):
    ts = np.linspace(0.2, 1.0, 9)
    ps = [pressure(gauss12, t) for t in ts]
    for a, b in zip(ps, ps[1:]):
        assert b.lo < a.hi


def test_pressure_infinite_below_convergence():
    # squared digits along the unbounded stage rule: sum k^{-4t} diverges for t <= 1/4
    ds = DigitSet(bands=((4, 8), (64, 128)), squares=True, stage_rule="nonexistence",
                  meta={"a": nonexistence_sequence(2)})
    system = gauss_cifs(ds)
    with pytest.raises(PressureInfinite, match="pressure infinite"):
        pressure(system, 0.2)
    with pytest.raises(PressureInfinite):
        pressure(system, 0.0)
    assert pressure(system, 0.3).hi < math.inf


def test_infinite_band_dimension():
    system = gauss_cifs(DigitSet(bands=((2, 10 ** 6),)))
    b = hausdorff_dim(system, 1e-3, B=1000)
    # digits >= 2 up to a million: a little above the value ~0.8368 for all digits >= 2
    assert 0.83 < b.lo < b.hi < 0.85


def test_naive_bracket_contains_transfer_bracket(gauss12):
    naive = naive_level_bracket(gauss12, 0.5, 8)
    p = pressure(gauss12, 0.5)
    assert naive.lo <= p.lo and p.hi <= naive.hi


# -- words and covers -------------------------------------------------------------

def test_stopping_words_cantor(cantor):
    cover = stopping_words(cantor, 3.0 ** -5 * 1.0000001)
    words = cover.words()
    assert len(words) == 32 and all(len(w) == 5 for w in words)
    assert is_prefix_free(words)


@given(st.floats(1e-5, 0.3))
@settings(max_examples=25)
def test_stopping_rule(r):
    system = gauss_cifs(DigitSet.of([1, 2, 5]))
    cover = stopping_words(system, r)
    assert np.all(cover.rho <= r * (1 + 1e-12))
    assert np.all(cover.inner_rho > r)
    words = cover.words()
    assert is_prefix_free(words)
    for w in words[:50]:
        parent = w[:-1]
        assert contraction_norm(system, parent)[1] > r


def test_budget_exceeded_carries_partial(gauss12):
    with pytest.raises(BudgetExceeded) as info:
        stopping_words(gauss12, 1e-9, budget=100)
    assert info.value.partial is not None and not info.value.partial.complete


def test_level_words(cantor):
    assert len(level_words(cantor, 4)) == 16


def test_orbit_set_degenerate():
    system = gauss_cifs(DigitSet.of([2, 3]))
    assert len(orbit_set(system, 0.5, 3).points) == 8


def test_tau_estimate_cantor(cantor):
    est = symbolic_covering_estimate(cantor, 3.0 ** -8)
    assert est.lower <= 2 ** 8 * 2 <= est.upper
    assert est.complete


def test_bounded_neighbourhood(cantor):
    r = 3.0 ** -4
    cover = stopping_words(cantor, r * 1.0000001)
    probes = np.linspace(0, 1, 101)
    assert bounded_neighbourhood_count(cantor, cover, r / 3, probes) <= 3


# -- rho submultiplicativity ----------------------------------------------------------

@given(st.lists(st.integers(0, 2), min_size=1, max_size=8), st.lists(st.integers(0, 2), min_size=1, max_size=8))
def test_rho_submultiplicative(w1, w2):
    system = gauss_cifs(DigitSet.of([1, 2]))
    K = system.distortion
    a = contraction_norm(system, w1)[1]
    b = contraction_norm(system, w2)[1]
    ab = contraction_norm(system, tuple(w1) + tuple(w2))[1]
    assert ab <= a * b * (1 + 1e-12)
    assert ab >= a * b / K * (1 - 1e-12)
