import time

import numpy as np
import pytest
from helpers import random_convex
from hypothesis import given
from hypothesis import strategies as st

from pdeinpaint.spatial1d import (
    NONCONVEX_U1,
    NONCONVEX_U2,
    ConvexFunction1D,
    Spline1D,
    best_line_points,
    check_knots,
    exp2x3px,
    expx,
    hamideh_knots,
    l1_interp_error,
    l1_spline_error,
    midpoint_violations,
    nonconvexity_witness,
    optimize_knots_interpolation,
    square,
    tonal_optimize_1d,
)


def affine(m=1.7, k=-0.4):
    # derivative must increase strictly for the constructor, so add a vanishing bump
    return ConvexFunction1D(f=lambda x: m * x + k, df=lambda x: m + 1e-300 * x, a=-2.0, b=3.0)


def test_convexity_check():
    with pytest.raises(ValueError):
        ConvexFunction1D(f=np.sin, df=np.cos, a=0.0, b=6.0)
    with pytest.raises(ValueError):
        ConvexFunction1D(f=np.exp, df=np.exp, a=1.0, b=1.0)


def test_knot_validation():
    with pytest.raises(ValueError):
        check_knots([0.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        check_knots([0.0, 1.0], a=-1.0)
    with pytest.raises(ValueError):
        check_knots([1.0])


def test_interp_error_affine_is_zero():
    f = ConvexFunction1D(f=lambda x: 1.7 * x - 0.4 + 1e-9 * x * x, df=lambda x: 1.7 + 2e-9 * x, a=-2.0, b=3.0)
    assert abs(l1_interp_error(f, [-2.0, 0.3, 1.1, 3.0])) < 1e-8


def test_interp_error_square_hand_value():
    assert l1_interp_error(square(), [-1.0, 0.0, 1.0]) == pytest.approx(1 / 3, abs=1e-15)


def test_quadrature_fallback_matches_exact_integral():
    exact = exp2x3px()
    numeric = ConvexFunction1D(exact.f, exact.df, exact.a, exact.b)
    knots = [-4.0, 0.0, 2.5, 4.0]
    assert l1_interp_error(numeric, knots) == pytest.approx(l1_interp_error(exact, knots), rel=1e-9)


@given(st.integers(0, 10_000), st.lists(st.floats(0.01, 0.99), min_size=1, max_size=6), st.floats(0.01, 0.99))
def test_refinement_never_increases_error(seed, inner, extra):
    f = random_convex(seed)
    span = f.b - f.a
    c = np.unique(np.concatenate([[f.a, f.b], f.a + span * np.array(inner)]))
    c[0], c[-1] = f.a, f.b
    refined = np.unique(np.append(c, f.a + span * extra))
    refined[0], refined[-1] = f.a, f.b
    assert l1_interp_error(f, refined) <= l1_interp_error(f, c) + 1e-12


def test_square_two_intervals_optimum_at_zero():
    res = optimize_knots_interpolation(square(), 3)
    assert res.converged
    assert res.knots[1] == pytest.approx(0.0, abs=1e-10)


def test_fixed_point_is_kept():
    f = exp2x3px()
    res = optimize_knots_interpolation(f, 6)
    again = optimize_knots_interpolation(f, 6, init=res.knots)
    assert np.abs(again.knots - res.knots).max() < 1e-10
    assert again.iterations <= 2


def test_too_few_knots():
    with pytest.raises(ValueError):
        optimize_knots_interpolation(square(), 2)
    with pytest.raises(ValueError):
        hamideh_knots(square(), 2)


def test_wrong_init_length():
    with pytest.raises(ValueError):
        optimize_knots_interpolation(square(), 4, init=[-1.0, 0.0, 1.0])


def test_nonconvex_function_detected_in_bisection():
    # a function that passes the sampled check but not the local bracket
    f = square()
    from pdeinpaint.spatial1d import _inverse_derivative

    with pytest.raises(ValueError, match="sign change"):
        _inverse_derivative(f, 10.0, -1.0, 1.0)


@given(st.integers(0, 10_000), st.integers(3, 9))
def test_ordering_and_monotone_energy(seed, n):
    f = random_convex(seed)
    res = optimize_knots_interpolation(f, n, max_iters=200)
    for c in res.history:
        assert np.all(np.diff(c) > 0)
    assert np.all(np.diff(res.errors) <= 1e-12)


@given(st.integers(0, 10_000), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_single_interior_knot_is_unique(seed, t1, t2):
    f = random_convex(seed)
    ends = []
    for t in (t1, t2):
        init = np.array([f.a, f.a + t * (f.b - f.a), f.b])
        ends.append(optimize_knots_interpolation(f, 3, init=init, tol=1e-13).knots[1])
    assert abs(ends[0] - ends[1]) <= 1e-8


def test_table_value_interpolation_five_knots():
    res = optimize_knots_interpolation(exp2x3px(), 5)
    assert res.errors[-1] == pytest.approx(12.501, rel=0.01)


def test_best_line_points():
    assert best_line_points(0.0, 1.0) == (0.25, 0.75)


def test_hamideh_square_symmetric():
    res, spline = hamideh_knots(square(), 3)
    assert res.knots[1] == pytest.approx(0.0, abs=1e-10)
    assert isinstance(spline, Spline1D)


def test_hamideh_table_value():
    res, spline = hamideh_knots(exp2x3px(), 5)
    assert res.errors[-1] == pytest.approx(3.982, rel=0.01)
    assert l1_spline_error(exp2x3px(), spline) == pytest.approx(res.errors[-1], rel=1e-12)


def test_spline_error_of_interpolant_matches_trapezoid_formula():
    f = exp2x3px()
    c = np.array([-4.0, -1.0, 2.0, 4.0])
    s = Spline1D(c, f.f(c))
    assert l1_spline_error(f, s) == pytest.approx(l1_interp_error(f, c), rel=1e-10)


def test_tonal_affine_is_exact():
    f = ConvexFunction1D(f=lambda x: 2 * x + 1 + 1e-12 * x * x, df=lambda x: 2 + 2e-12 * x, a=0.0, b=2.0)
    res = tonal_optimize_1d(f, [0.0, 0.7, 2.0])
    assert res.error < 1e-8
    assert np.allclose(res.spline.values, [1.0, 2.4, 5.0], atol=1e-7)


@pytest.mark.parametrize("seed", range(5))
def test_tonal_single_interval_interpolates_quarter_points(seed):
    f = random_convex(seed)
    res = tonal_optimize_1d(f, [f.a, f.b])
    for xi in best_line_points(f.a, f.b):
        assert abs(res.spline(xi) - f(xi)) < 1e-6


@given(st.integers(0, 10_000), st.integers(3, 7))
def test_tonal_never_worse_than_interpolation(seed, n):
    f = random_convex(seed)
    c = np.linspace(f.a, f.b, n)
    c[0], c[-1] = f.a, f.b
    assert tonal_optimize_1d(f, c).error <= l1_interp_error(f, c) + 1e-9


def test_tonal_table_value():
    f = exp2x3px()
    knots = optimize_knots_interpolation(f, 5).knots
    assert tonal_optimize_1d(f, knots).error == pytest.approx(4.229, rel=0.01)


def test_witness_shape_and_endpoints():
    curve = nonconvexity_witness()
    assert curve.shape == (101,)
    assert curve[0] == l1_interp_error(expx(), NONCONVEX_U1)
    assert curve[-1] == l1_interp_error(expx(), NONCONVEX_U2)


def test_witness_has_chord_violation():
    t0 = time.perf_counter()
    curve = nonconvexity_witness()
    assert time.perf_counter() - t0 < 1.0
    assert midpoint_violations(curve).size >= 1


def test_midpoint_violations_on_convex_curve():
    assert midpoint_violations(np.linspace(-1, 1, 21) ** 2).size == 0
