import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skorohod.multilinear import (SymmetricForm, SymmetricPolynomial, dir_deriv, eval_form, eval_poly,
                                  form_norm_upper, leading_form_norm, random_polynomial)


def test_quadratic_value_gradient_and_norm():
    # x^2 - y^2 + 4xy
    P = SymmetricPolynomial.from_monomials(2, {(2, 0): 1.0, (0, 2): -1.0, (1, 1): 4.0})
    assert float(P(np.array([1.0, 2.0]))) == pytest.approx(5.0)
    assert float(dir_deriv(P, np.array([1.0, 2.0]), np.array([1.0, 0.0]))) == pytest.approx(10.0)
    fn = leading_form_norm(P)
    assert fn.value == pytest.approx(np.sqrt(5.0)) and not fn.lower_bound


def test_product_of_three_coordinates():
    P = SymmetricPolynomial.from_monomials(3, {(1, 1, 1): 1.0})
    fn = leading_form_norm(P)
    assert fn.lower_bound
    assert fn.value == pytest.approx(3 ** -1.5, rel=1e-10)
    e = np.eye(3)
    assert eval_form(P.leading, e[0], e[1], e[2]) == pytest.approx(1 / 6)


def test_linear_norm_is_euclidean():
    P = SymmetricPolynomial.linear([3.0, 4.0], 1.0)
    assert leading_form_norm(P).value == pytest.approx(5.0)
    assert float(P(np.array([1.0, 1.0]))) == pytest.approx(8.0)


def test_univariate_coefficients():
    P = SymmetricPolynomial.from_monomials(1, {(3,): 1.0, (1,): -1.0})
    assert np.allclose(P.univariate_coeffs(), [0, -1, 0, 1])
    assert leading_form_norm(P).value == pytest.approx(1.0)


def test_sum_of_squares_norm_and_upper_bound():
    P = SymmetricPolynomial.from_monomials(3, {(2, 0, 0): 1.0, (0, 2, 0): 1.0, (0, 0, 2): 1.0})
    assert leading_form_norm(P).value == pytest.approx(1.0)
    assert form_norm_upper(P.leading) == pytest.approx(np.sqrt(3.0))


def test_from_tensor_symmetrises():
    T = np.zeros((2, 2))
    T[0, 1] = 2.0
    B = SymmetricForm.from_tensor(T)
    assert np.allclose(B.dense(), [[0, 1], [1, 0]])


def test_json_round_trip():
    P = random_polynomial(3, 3, 4)
    Q = SymmetricPolynomial.from_json(P.to_json())
    X = np.random.default_rng(0).standard_normal((5, 3))
    assert np.allclose(eval_poly(P, X), eval_poly(Q, X), rtol=1e-15)


def test_zero_leading_form_rejected():
    P = SymmetricPolynomial([SymmetricForm(2, 0, {(): 1.0})])
    with pytest.raises(ValueError):
        leading_form_norm(P)


def test_eval_form_checks_arity():
    B = SymmetricForm.from_monomials(2, {(1, 1): 1.0})
    with pytest.raises(ValueError):
        eval_form(B, np.ones(2))


def brute_force_norm(B, samples=200_000, seed=1):
    X = np.random.default_rng(seed).standard_normal((samples, B.dim))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    return np.abs(B.diagonal(X)).max()


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 3), st.integers(3, 4))
def test_norm_bracketed_by_sampling_and_frobenius(seed, dim, degree):
    P = random_polynomial(dim, degree, seed)
    fn = leading_form_norm(P, restarts=16)
    sampled = brute_force_norm(P.leading, 20_000, seed)
    assert sampled <= fn.value * (1 + 1e-9)
    assert fn.value <= form_norm_upper(P.leading) * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4), st.integers(1, 4))
def test_diagonal_matches_multilinear_evaluation(seed, dim, degree):
    B = random_polynomial(dim, degree, seed).leading
    x = np.random.default_rng(seed).standard_normal(dim)
    assert B.diagonal(x) == pytest.approx(eval_form(B, *[x] * degree), rel=1e-10, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 4))
def test_directional_derivative_matches_finite_difference(seed, dim, degree):
    P = random_polynomial(dim, degree, seed)
    rng = np.random.default_rng(seed + 1)
    x, th = rng.standard_normal(dim), rng.standard_normal(dim)
    h = 1e-6
    fd = (float(P(x + h * th)) - float(P(x - h * th))) / (2 * h)
    assert float(dir_deriv(P, x, th)) == pytest.approx(fd, rel=1e-5, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 3))
def test_form_is_symmetric(seed, dim, degree):
    B = random_polynomial(dim, degree, seed).leading
    xs = list(np.random.default_rng(seed).standard_normal((degree, dim)))
    base = eval_form(B, *xs)
    for perm in itertools.permutations(range(degree)):
        assert eval_form(B, *[xs[i] for i in perm]) == pytest.approx(base, rel=1e-12, abs=1e-12)
