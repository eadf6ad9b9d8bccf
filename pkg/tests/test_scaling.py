import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cifsdim.errors import ClassWindowError, CifsdimError, InconsistentParameters, ScaleOutOfRange
from cifsdim.scaling import (ClassWindow, Constant, ScalingFunction, Toward, box_dimension_exists,
                             class_membership_defect, concatenate, dense_grid, dim_interval, dumps, from_json,
                             minimal_envelope, pointwise_extrema, psi, psi_grid_error, read_samples_csv,
                             to_json, write_samples_csv)

from oracles import envelope_dp
from strategies import piecewise_functions


def test_constant_and_toward_values():
    f = Toward(0.2, 0.8, 3.0)
    assert f(0.0) == pytest.approx(0.8)
    assert f(1.0) == pytest.approx(0.2 + 0.6 / math.e)
    assert f(10.0) == pytest.approx(f(3.0))         # held at the end value
    assert f(-5.0) == pytest.approx(0.8)            # left extension
    assert Constant(0.4, 1.0)(0.5) == 0.4


def test_concatenate_checks_continuity():
    with pytest.raises(CifsdimError, match="discontinuous concatenation"):
        concatenate([Constant(0.3, 1.0), Constant(0.5, 1.0)])
    f = concatenate([Constant(0.3, 1.0), Toward(0.9, 0.3, 2.0)])
    assert f.end == pytest.approx(3.0)
    assert f(1.0 + math.log(2.0)) == pytest.approx(0.6)


def test_envelope_of_constant_below_level_is_level():
    g = minimal_envelope(Constant(0.2, 5.0), 0.5)
    assert np.allclose(g(np.linspace(-1, 8, 50)), 0.5)


def test_envelope_relaxes_after_a_bump():
    f = concatenate([Toward(1.0, 0.0, 1.0), Toward(0.0, 1.0 - math.exp(-1.0), 1.0)])
    g = minimal_envelope(f, 0.3)
    peak = f(1.0)
    for x in (1.5, 2.0, 4.0):
        assert g(x) == pytest.approx(max(f(x), 0.3 + (peak - 0.3) * math.exp(-(x - 1.0))), abs=1e-12)


@given(piecewise_functions(), st.floats(0.0, 1.0))
def test_envelope_matches_dp_oracle(f, lam):
    g = minimal_envelope(f, lam)
    xs, ref = envelope_dp(lambda x: float(f(x)), lam, 0.0, 1.0, 1e-4)
    got = g(np.array(xs[::10]))
    assert np.max(np.abs(got - np.array(ref[::10]))) <= 1e-3


@given(piecewise_functions(), st.floats(0.0, 1.0))
def test_envelope_dominates_and_is_in_class(f, lam):
    g = minimal_envelope(f, lam)
    grid = np.linspace(-0.5, 2.0, 400)
    assert np.all(g(grid) >= f(grid) - 1e-12)
    assert np.all(g(grid) >= lam - 1e-12)
    assert class_membership_defect(g, ClassWindow(lam, 1.0), grid) <= 1e-9


@given(piecewise_functions(), st.floats(0.0, 1.0))
def test_envelope_is_idempotent(f, lam):
    g = minimal_envelope(f, lam)
    gg = minimal_envelope(g, lam)
    grid = np.linspace(-0.5, 2.0, 300)
    assert np.max(np.abs(g(grid) - gg(grid))) <= 1e-9


@given(st.lists(piecewise_functions(max_segments=3), min_size=1, max_size=4))
def test_pointwise_sup_inf(fs):
    grid = np.linspace(-0.2, 1.5, 300)
    vals = np.stack([f(grid) for f in fs])
    assert np.allclose(pointwise_extrema(fs, "sup")(grid), vals.max(axis=0), atol=1e-9)
    assert np.allclose(pointwise_extrema(fs, "inf")(grid), vals.min(axis=0), atol=1e-9)


def test_sampled_envelope_running_max():
    xs = np.array([0.0, 1.0, 2.0])
    f = ScalingFunction(samples=(xs, np.array([0.9, 0.4, 0.2])))
    g = minimal_envelope(f, 0.1)
    assert g(1.0) == pytest.approx(0.4)
    assert g(2.0) == pytest.approx(0.1 + 0.3 * math.exp(-1.0))


def test_envelope_rejects_out_of_class_input():
    f = ScalingFunction(samples=(np.array([0.0, 0.01]), np.array([1.0, 0.0])))
    with pytest.raises(ClassWindowError):
        minimal_envelope(f, 0.0)


def test_dim_interval_hand_values():
    # (0.5, 0.2, 0.8, 1): 0.5 + 0.3 * 0.5 * 0.2 / (0.8 - 0.1) = 0.5 + 0.03/0.7
    iv = dim_interval(0.5, 0.2, 0.8, 1.0)
    assert iv.lo == pytest.approx(0.5, abs=1e-12)
    assert iv.hi == pytest.approx(0.5 + 0.03 / 0.7, abs=1e-12)
    assert iv.hi == pytest.approx(0.542857142857142857, abs=1e-12)
    # (0.3, 0.2, 0.6, 1): 0.3 + 0.3 * 0.7 * 0.2 / 0.54
    assert dim_interval(0.3, 0.2, 0.6, 1.0).hi == pytest.approx(0.3 + 0.042 / 0.54, abs=1e-12)
    assert dim_interval(0.7, 0.2, 0.6).degenerate


def test_dim_interval_errors():
    with pytest.raises(InconsistentParameters):
        dim_interval(0.5, 0.6, 0.4)


@st.composite
def dim_tuples(draw):
    h = draw(st.floats(0.01, 0.99))
    s = draw(st.floats(0.0, 0.99))
    t = draw(st.floats(s, 1.0))
    return h, s, t


@given(dim_tuples(), st.floats(1.0, 50.0), st.floats(0.0, 50.0))
def test_dim_interval_monotone_in_alpha(p, a1, da):
    h, s, t = p
    lo1, hi1 = dim_interval(h, s, t, a1).lo, dim_interval(h, s, t, a1).hi
    iv2 = dim_interval(h, s, t, a1 + da)
    assert iv2.lo == lo1
    assert iv2.hi >= hi1 - 1e-12


@given(dim_tuples())
def test_dim_interval_alpha_infinity(p):
    h, s, t = p
    iv = dim_interval(h, s, t, math.inf)
    if t > h and s > 0:
        assert iv.hi == pytest.approx(max(max(h, s), s + (1 - s / t) * h), abs=1e-12)
    assert dim_interval(h, s, t, 1e12).hi == pytest.approx(iv.hi, abs=1e-9)


@given(dim_tuples())
def test_existence_predicate(p):
    h, s, t = p
    assert box_dimension_exists(h, s, t) == (t <= max(h, s))
    if s == t or t <= h:
        assert dim_interval(h, s, t).degenerate
        assert box_dimension_exists(h, s, t)


def test_psi_of_constant_profile():
    # s(r) = c constant: psi = max(h, c)
    for h, c in ((0.3, 0.6), (0.6, 0.3)):
        val, _ = psi(lambda r: c, h, 1e-5)
        assert val == pytest.approx(max(h, c), abs=1e-12)
    with pytest.raises(ScaleOutOfRange):
        psi(lambda r: 0.5, 0.5, 1.5)
    assert psi_grid_error(1, 1e-3, 1e-6) == pytest.approx(1e-3 + math.log(2) / math.log(1e6))


def test_json_and_csv_round_trip(tmp_path):
    f = concatenate([Constant(0.3, 1.0), Toward(0.9, 0.3, 2.0), Toward(0.1, 0.3 + 0.6 * (1 - math.exp(-2)), 1.5)])
    back = from_json(to_json(f))
    grid = dense_grid(f, 0.01)
    assert np.array_equal(back(grid), f(grid))
    assert "segments" in dumps(f)
    write_samples_csv(f, tmp_path / "f.csv", grid)
    g = read_samples_csv(tmp_path / "f.csv")
    assert np.allclose(g(grid), f(grid))
