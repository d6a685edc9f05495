import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssmred.reduction import PolynomialMap, RegressionError, delay_embed, fit_polynomial, multi_indices


def test_multi_indices_are_graded():
    assert multi_indices(2, 1, 2).tolist() == [[1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]
    assert multi_indices(1, 0, 3).ravel().tolist() == [0, 1, 2, 3]


def test_evaluation_at_origin_is_constant_term():
    rng = np.random.default_rng(0)
    with_const = PolynomialMap(multi_indices(2, 0, 3), rng.normal(size=(3, 10)))
    assert np.array_equal(with_const(np.zeros(2)), with_const.coeffs[:, 0])
    anchored = PolynomialMap(multi_indices(2, 1, 3), rng.normal(size=(3, 9)))
    assert np.array_equal(anchored(np.zeros(2)), np.zeros(3))


def test_block_and_orders():
    p = PolynomialMap.zeros(2, 1, 1, 3)
    assert (p.min_order, p.max_order, p.input_dim, p.output_dim) == (1, 3, 2, 1)
    assert p.block(2).shape == (1, 3)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(1)
    p = PolynomialMap(multi_indices(2, 1, 3), rng.normal(size=(2, 9)))
    z = np.array([0.3, -0.2])
    num = np.column_stack([(p(z + h) - p(z - h)) / 2e-6 for h in np.eye(2) * 1e-6])
    assert np.allclose(p.jacobian(z), num, atol=1e-8)


def test_dict_round_trip_is_exact():
    rng = np.random.default_rng(2)
    p = PolynomialMap(multi_indices(2, 1, 3), rng.normal(size=(4, 9)))
    back = PolynomialMap.from_dict(2, p.to_dict())
    assert np.array_equal(back.exponents, p.exponents) and np.array_equal(back.coeffs, p.coeffs)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3), st.integers(1, 4))
def test_fit_recovers_exact_polynomials(seed, dim, order):
    rng = np.random.default_rng(seed)
    truth = PolynomialMap(multi_indices(dim, 1, order), rng.normal(size=(2, len(multi_indices(dim, 1, order)))))
    z = rng.uniform(-1, 1, size=(dim, 400))
    fit, cond = fit_polynomial(z, truth(z), 1, order)
    assert cond < 1e10
    assert np.allclose(fit.coeffs, truth.coeffs, atol=1e-8)


def test_fit_rejects_rank_deficiency():
    z = np.ones((1, 50))
    with pytest.raises(RegressionError):
        fit_polynomial(z, z, 0, 2)
    with pytest.raises(RegressionError):
        fit_polynomial(np.zeros((1, 50)), np.zeros((1, 50)), 1, 2)
    with pytest.raises(RegressionError):
        fit_polynomial(np.arange(3.0)[None], np.arange(3.0)[None], 1, 5)


# ---------------------------------------------------------------- delay embedding


def test_delay_embed_counts():
    assert delay_embed(np.arange(1000.0), 5, 1).shape == (5, 996)
    assert np.array_equal(delay_embed(np.arange(7.0), 1), np.arange(7.0)[None])


def test_delay_embed_construction():
    assert delay_embed([1, 2, 3, 4], 2, 1).T.tolist() == [[1, 2], [2, 3], [3, 4]]
    assert delay_embed(np.arange(10.0), 3, 2)[:, 0].tolist() == [0, 2, 4]


def test_delay_embed_too_short():
    with pytest.raises(ValueError):
        delay_embed([1, 2, 3], 5, 1)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=10, max_size=60), st.integers(1, 4), st.integers(1, 3))
def test_delay_embed_first_row_is_the_series(values, p, delay):
    X = delay_embed(values, p, delay)
    assert np.array_equal(X[0], np.asarray(values)[: X.shape[1]])
    assert X.shape[1] == len(values) - (p - 1) * delay
