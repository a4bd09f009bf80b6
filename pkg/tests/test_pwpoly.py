import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skorohod import pwpoly
from skorohod.pwpoly import PiecewisePoly


def irwin_hall_pdf(x, n):
    """Closed form of the density of a sum of ``n`` U[0,1] variables."""
    return sum((-1) ** k * math.comb(n, k) * max(x - k, 0.0) ** (n - 1) for k in range(n + 1)) / math.factorial(n - 1)


def uniform01():
    return PiecewisePoly.constant(0.0, 1.0, 1.0)


def random_pl(seed, pieces=5):
    rng = np.random.default_rng(seed)
    x = np.cumsum(rng.uniform(0.2, 1.0, pieces + 1)) - 1.0
    left, right = rng.uniform(0, 1, pieces), rng.uniform(0, 1, pieces)
    p = PiecewisePoly.piecewise_linear(x, left, right)
    return p * (1.0 / pwpoly.integral(p))


def test_constant_evaluate_and_integral():
    p = PiecewisePoly.constant(-1.0, 3.0, 0.25)
    assert pwpoly.integral(p) == pytest.approx(1.0, abs=1e-15)
    assert float(p(0.0)) == 0.25
    assert float(p(5.0)) == 0.0
    assert float(p(-1.0)) == 0.25  # right-continuous at the left end


def test_one_sided_limits_at_jump():
    p = PiecewisePoly.piecewise_linear([0, 1, 2], [1.0, 3.0], [2.0, 0.5])
    assert float(pwpoly.evaluate(p, 1.0, side="left")) == pytest.approx(2.0)
    assert float(pwpoly.evaluate(p, 1.0, side="right")) == pytest.approx(3.0)


def test_from_global_matches_monomials():
    p = PiecewisePoly.from_global([0, 1, 3], [[1, 2, 3], [0, 0, 1]])
    assert float(p(0.5)) == pytest.approx(1 + 1 + 0.75)
    assert float(p(2.0)) == pytest.approx(4.0)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_convolution_matches_irwin_hall(n):
    p = uniform01()
    for _ in range(n - 1):
        p = pwpoly.convolve(p, uniform01())
    xs = np.linspace(-0.5, n + 0.5, 57)
    expected = [irwin_hall_pdf(x, n) if 0 <= x <= n else 0.0 for x in xs]
    assert np.allclose(p(xs), expected, atol=1e-12)
    assert p.degree == n - 1


def test_irwin_hall_frozen_values():
    # frozen from the closed form above
    p = pwpoly.convolve(pwpoly.convolve(uniform01(), uniform01()), uniform01())
    assert float(p(1.5)) == pytest.approx(0.75, abs=1e-14)
    assert float(p(0.5)) == pytest.approx(0.125, abs=1e-14)


def test_convolution_of_jump_densities():
    p = PiecewisePoly.constant(0.0, 2.0, 0.5)
    q = PiecewisePoly.constant(0.0, 1.0, 1.0)
    r = pwpoly.convolve(p, q)
    assert pwpoly.integral(r) == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(r([0.5, 1.5, 2.5]), [0.25, 0.5, 0.25], atol=1e-14)


def test_affine_pushforward_scales_density():
    r = pwpoly.affine_pushforward(uniform01(), 2.0, 1.0)
    assert r.support == pytest.approx((1.0, 3.0))
    assert float(r(2.0)) == pytest.approx(0.5)
    s = pwpoly.affine_pushforward(uniform01(), -1.0, 0.0)
    assert s.support == pytest.approx((-1.0, 0.0))


def test_shift_moves_graph():
    p = pwpoly.shift(uniform01(), 0.25)
    assert p.support == pytest.approx((-0.25, 0.75))


def test_variation_of_uniform_and_triangle():
    assert pwpoly.variation(uniform01()) == pytest.approx(2.0)
    tri = pwpoly.convolve(uniform01(), uniform01())
    assert pwpoly.variation(tri) == pytest.approx(2.0, abs=1e-13)


def test_variation_counts_interior_extrema():
    # sin-like cubic bump: x(1-x)(x-0.5) has two interior extrema
    p = PiecewisePoly.from_global([0, 1], [[0, -0.5, 1.5, -1]])
    xs = np.linspace(0, 1, 200001)
    dense = np.sum(np.abs(np.diff(p(xs))))
    assert pwpoly.variation(p) == pytest.approx(dense, rel=1e-8)


def test_extrema_and_minimum():
    p = PiecewisePoly.from_global([-1, 1], [[1, 0, -1]])
    val, arg = pwpoly.extrema(p)
    assert val == pytest.approx(1.0) and arg == pytest.approx(0.0, abs=1e-12)
    assert pwpoly.minimum(p) == pytest.approx(0.0, abs=1e-15)


def test_real_roots_of_cubic():
    # (x + 0.5)(x - 0.1)(x - 0.7) on [-1, 1]
    coeffs = np.polynomial.polynomial.polyfromroots([-0.5, 0.1, 0.7])
    p = PiecewisePoly.from_global([-1, 0, 1], [coeffs, coeffs])
    roots = pwpoly.real_roots(p).points
    assert np.allclose(np.sort(roots), [-0.5, 0.1, 0.7], atol=1e-13)


def test_real_roots_flat_piece_reported_as_interval():
    p = PiecewisePoly.piecewise_linear([0, 1, 2], [0.0, 1.0], [0.0, 0.0])
    rs = pwpoly.real_roots(p)
    assert len(rs.intervals) == 1


def test_abs_and_power_integrals():
    p = PiecewisePoly.from_global([-1, 1], [[0, 1]])
    assert pwpoly.abs_integral(p) == pytest.approx(1.0)
    assert pwpoly.power_integral(p, 2) == pytest.approx(2 / 3)


def test_json_round_trip_is_exact():
    p = random_pl(3)
    q = PiecewisePoly.from_json(p.to_json())
    assert np.array_equal(p.breakpoints, q.breakpoints)
    assert np.array_equal(p.coeffs, q.coeffs)


def test_degree_cap_enforced():
    with pytest.raises(ValueError):
        PiecewisePoly([0, 1], [np.ones(40)])


def test_non_increasing_breakpoints_rejected():
    with pytest.raises(ValueError):
        PiecewisePoly([0, 0, 1], [[1], [1]])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 10_000))
def test_convolution_preserves_mass_and_commutes(s1, s2):
    p, q = random_pl(s1), random_pl(s2, 3)
    r1, r2 = pwpoly.convolve(p, q), pwpoly.convolve(q, p)
    assert pwpoly.integral(r1) == pytest.approx(1.0, abs=1e-12)
    xs = np.linspace(*r1.support, 41)
    assert np.allclose(r1(xs), r2(xs), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 10_000))
def test_convolution_does_not_increase_variation(s1, s2):
    p, q = random_pl(s1), random_pl(s2, 4)
    r = pwpoly.convolve(p, q)
    assert pwpoly.variation(r) <= min(pwpoly.variation(p), pwpoly.variation(q)) + 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(-2, 2), st.floats(0.1, 3))
def test_affine_pushforward_scales_variation(seed, c, s):
    p = random_pl(seed)
    r = pwpoly.affine_pushforward(p, s, c)
    assert pwpoly.integral(r) == pytest.approx(1.0, abs=1e-12)
    assert pwpoly.variation(r) == pytest.approx(pwpoly.variation(p) / s, rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-0.95, 0.95), min_size=1, max_size=5, unique=True))
def test_roots_found_for_prescribed_roots(roots):
    roots = sorted(roots)
    if np.min(np.diff(roots), initial=1.0) < 1e-3:
        return
    coeffs = np.polynomial.polynomial.polyfromroots(roots)
    p = PiecewisePoly.from_global([-1, 1], [coeffs])
    found = np.sort(pwpoly.real_roots(p).points)
    assert found.size == len(roots)
    assert np.allclose(found, roots, atol=1e-9)
