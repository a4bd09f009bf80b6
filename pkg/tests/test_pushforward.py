import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from skorohod import measures1d, pwpoly
from skorohod.measures1d import BVDensity, UniformMixture
from skorohod.multilinear import SymmetricPolynomial
from skorohod.pushforward import (CellCapError, GridDensity, ProductMeasure, image_samples, isotropic_map,
                                  linear_image_exact, linear_image_range, polynomial_image, projection_image,
                                  sample_product)

SQRT2 = np.sqrt(2.0)


def random_mixture_measure(seed, n, max_components=4):
    rng = np.random.default_rng(seed)
    mixes = []
    for _ in range(n):
        k = int(rng.integers(1, max_components + 1))
        w = rng.dirichlet(np.ones(k))
        a = rng.uniform(-2, 1, k)
        b = a + rng.uniform(0.1, 2.5, k)
        mixes.append(UniformMixture(w, a, b))
    return ProductMeasure.from_mixtures(mixes)


def test_diagonal_square_equality_case():
    mu = ProductMeasure.uniform_cube(2)
    dens = linear_image_exact(mu, np.array([1.0, 1.0]) / SQRT2)
    assert pwpoly.variation(dens) == pytest.approx(2 * SQRT2, abs=1e-12)
    assert float(dens(0.0)) == pytest.approx(SQRT2, abs=1e-12)


def test_coordinate_direction_returns_factor():
    mu = ProductMeasure([BVDensity.triangle(-1, 1), BVDensity.uniform(0, 3)])
    dens = linear_image_exact(mu, [1.0, 0.0])
    assert pwpoly.variation(dens) == pytest.approx(mu.tvs[0])


def test_convolution_and_mixture_routes_agree():
    mu = random_mixture_measure(3, 3)
    a = np.array([0.2, -0.7, 0.5])
    a /= np.linalg.norm(a)
    d1 = linear_image_exact(mu, a)
    d2 = linear_image_exact(mu, a, method="mixture")
    x = np.linspace(d1.support[0] - 0.1, d1.support[1] + 0.1, 301)
    assert np.allclose(d1(x), d2(x), atol=1e-12)


def test_cell_cap_raises():
    mu = random_mixture_measure(1, 6, max_components=4)
    with pytest.raises(CellCapError):
        linear_image_exact(mu, np.ones(6) / np.sqrt(6), cap=10)


def test_non_unit_direction_rejected():
    with pytest.raises(ValueError):
        linear_image_exact(ProductMeasure.uniform_cube(2), [1.0, 1.0])


def test_linear_image_range():
    r = linear_image_range(ProductMeasure.uniform_cube(2), [[1.0, 0.0], [0.6, -0.8]])
    assert np.allclose(r, [[-0.5, 0.5], [-0.7, 0.7]])


def test_sampling_independent_of_thread_count():
    mu = random_mixture_measure(5, 3)
    X1 = sample_product(mu, 150_000, 9, threads=1)
    X4 = sample_product(mu, 150_000, 9, threads=4)
    assert np.array_equal(X1, X4)
    assert not np.array_equal(X1, sample_product(mu, 150_000, 10, threads=1))


def test_sample_moments_match_exact_image():
    mu = ProductMeasure([BVDensity.triangle(0, 1), BVDensity.uniform(-1, 2)])
    a = np.array([0.6, 0.8])
    dens = linear_image_exact(mu, a)
    y = sample_product(mu, 200_000, 1) @ a
    lo, hi = dens.support
    x = np.linspace(lo, hi, 20001)
    mean = integrate.trapezoid(x * dens(x), x)
    assert y.mean() == pytest.approx(mean, abs=4 * y.std() / np.sqrt(y.size))


def test_grid_density_invariants_and_csv():
    y = np.random.default_rng(0).uniform(0, 1, 10_000)
    G = GridDensity.from_samples(y, 10, [(0.0, 0.5)], seed=0)
    assert G.masses.sum() + G.outside_mass == pytest.approx(1.0, abs=1e-12)
    assert G.outside_mass == pytest.approx(0.5, abs=0.03)
    lines = G.to_csv().strip().splitlines()
    assert lines[0] == "bin_left,bin_right,mass"
    assert len(lines) == 11
    assert G.to_dict()["generator"].startswith("numpy.PCG64")


def test_grid_density_rejects_bad_masses():
    with pytest.raises(ValueError):
        GridDensity((np.array([0.0, 1.0]),), np.array([0.5]), 10)


def test_projection_image_two_dimensional():
    mu = ProductMeasure.uniform_cube(3)
    G = projection_image(mu, [[1, 0, 0], [0, 0.6, 0.8]], 50_000, 2, bins=16)
    assert G.k == 2 and G.masses.shape == (16, 16)
    assert G.outside_mass == 0.0
    with pytest.raises(ValueError):
        projection_image(mu, [[1, 1, 0]], 1000, 0)


def test_polynomial_image_reproducible():
    mu = ProductMeasure.uniform_cube(2)
    P = SymmetricPolynomial.from_monomials(2, {(1, 1): 1.0})
    g1 = polynomial_image(mu, P, 20_000, 4, bins=32)
    g2 = polynomial_image(mu, P, 20_000, 4, bins=32)
    assert g1.to_csv() == g2.to_csv()


def test_image_samples_dimension_check():
    with pytest.raises(ValueError):
        image_samples(ProductMeasure.uniform_cube(2), SymmetricPolynomial.linear([1.0, 1.0, 1.0]), 100, 0)


def test_isotropic_map_whitens():
    rng = np.random.default_rng(0)
    A = np.linalg.qr(rng.standard_normal((4, 2)))[0].T
    L = np.array([1.0, 2.0, 0.5, 3.0])
    M = isotropic_map(A, L)
    assert np.allclose(M @ M.T, np.eye(2), atol=1e-12)


def test_derivative_bounds():
    mu = ProductMeasure([BVDensity.uniform(0, 1), BVDensity.uniform(0, 2)])
    assert mu.derivative_bound([0.6, 0.8]) == pytest.approx(0.6 * 2 + 0.8 * 1)
    assert mu.sup_derivative_bound() == pytest.approx(np.sqrt(5.0))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(1, 4))
def test_linear_image_norm_bound(seed, n):
    mu = random_mixture_measure(seed, n)
    a = np.random.default_rng(seed).standard_normal(n)
    a /= np.linalg.norm(a)
    dens = linear_image_exact(mu, a)
    assert pwpoly.integral(dens) == pytest.approx(1.0, abs=1e-10)
    assert pwpoly.variation(dens) <= SQRT2 * mu.tvs.max() + 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(2, 6))
def test_cube_section_bound(seed, n):
    theta = np.random.default_rng(seed).standard_normal(n)
    theta /= np.linalg.norm(theta)
    dens = linear_image_exact(ProductMeasure.uniform_cube(n), theta, cap=None)
    assert float(dens(0.0)) <= SQRT2 + 1e-9
