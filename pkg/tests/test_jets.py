import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sasakilab.jets import MAX_ORDER, algebra, multi_indices, ncoef

def _random_jet(alg, rng, order):
    return rng.normal(size=alg.size(order))


def test_multi_index_count_and_grading():
    for dim in range(1, 5):
        for order in range(MAX_ORDER + 1):
            alphas = multi_indices(dim, order)
            assert len(alphas) == ncoef(dim, order) == len(set(alphas))
            assert [sum(a) for a in alphas] == sorted(sum(a) for a in alphas)


def test_order_limit():
    with pytest.raises(ValueError):
        algebra(2, MAX_ORDER + 1)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(0, 4))
def test_product_is_commutative_and_associative(seed, dim, order):
    alg = algebra(dim, order)
    rng = np.random.default_rng(seed)
    a, b, c = (_random_jet(alg, rng, order) for _ in range(3))
    assert np.allclose(alg.mul(a, b, order), alg.mul(b, a, order), atol=1e-12)
    assert np.allclose(alg.mul(alg.mul(a, b, order), c, order), alg.mul(a, alg.mul(b, c, order), order), atol=1e-10)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 4))
def test_leibniz_rule(seed, dim, order):
    alg = algebra(dim, order)
    rng = np.random.default_rng(seed)
    a, b = _random_jet(alg, rng, order), _random_jet(alg, rng, order)
    for i in range(dim):
        lhs = alg.deriv(alg.mul(a, b, order), i, order)
        rhs = (alg.mul(alg.deriv(a, i, order), alg.truncate(b, order - 1), order - 1)
               + alg.mul(alg.truncate(a, order - 1), alg.deriv(b, i, order), order - 1))
        assert np.allclose(lhs, rhs, atol=1e-10)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(0, 4))
def test_reciprocal_inverts(seed, dim, order):
    alg = algebra(dim, order)
    rng = np.random.default_rng(seed)
    a = _random_jet(alg, rng, order)
    a[0] = 1.5 + abs(a[0])
    one = alg.mul(a, alg.reciprocal(a, order), order)
    assert np.allclose(one, alg.constant(1.0, order), atol=1e-10)


@given(st.floats(-1.5, 1.5))
def test_univariate_exp_taylor(x):
    alg = algebra(1, 4)
    u = alg.variable(np.array(x), 0, 4)
    e = alg.apply("exp", u, 4)
    assert np.allclose(e, [math.exp(x) / math.factorial(k) for k in range(5)], rtol=1e-13)


@given(st.floats(0.2, 3.0))
def test_real_power_matches_int_power(x):
    alg = algebra(1, 4)
    u = alg.variable(np.array(x), 0, 4)
    assert np.allclose(alg.real_power(u, 3.0, 4), alg.int_power(u, 3, 4), rtol=1e-12)
