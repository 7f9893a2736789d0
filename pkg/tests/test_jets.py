import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slzeta import jets

coef = st.floats(-3, 3, allow_nan=False)
jet = st.lists(coef, min_size=2, max_size=7).map(np.array)


@given(jet, jet)
def test_mul_matches_polynomial_product(a, b):
    n = min(len(a), len(b))
    want = np.polynomial.polynomial.polymul(a[:n], b[:n])[:n]
    np.testing.assert_allclose(jets.mul(a, b), np.pad(want, (0, n - len(want))), atol=1e-12)


@given(jet.filter(lambda a: abs(a[0]) > 0.1))
def test_reciprocal(a):
    r = jets.reciprocal(a)
    out = jets.mul(a, r)
    np.testing.assert_allclose(out, np.eye(1, len(a))[0], atol=1e-8 * max(1, np.max(np.abs(r))))


@given(st.floats(0.5, 3), st.floats(-1.5, 1.5))
def test_power_of_exp_like_jet(c0, alpha):
    # (c0 e^x)^alpha = c0^alpha e^{alpha x}
    n = 6
    a = c0 * jets.from_derivatives(np.ones(n))
    want = c0 ** alpha * jets.from_derivatives(alpha ** np.arange(n))
    np.testing.assert_allclose(jets.power(a, alpha), want, rtol=1e-10, atol=1e-12)


@given(st.lists(coef, min_size=3, max_size=6), st.floats(0.3, 2).flatmap(
    lambda g1: st.lists(coef, min_size=1, max_size=4).map(lambda rest: np.array([0.0, g1, *rest]))))
def test_revert_is_compositional_inverse(f, g):
    h = jets.revert(g)
    np.testing.assert_allclose(jets.compose(g, h), np.eye(1, len(g), 1)[0], atol=1e-8 * max(1, np.max(np.abs(h))))


def test_compose_requires_zero_constant():
    with pytest.raises(ValueError):
        jets.compose(np.ones(3), np.ones(3))


def test_deriv_integ_inverse():
    a = np.array([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_allclose(jets.deriv(jets.integ(a)), a[:-1])


def test_shift_polynomial():
    c = [1.0, -1.0, 0.5, 2.0]
    x0 = 0.7
    jet = jets.shift_polynomial(c, x0, 6)
    x = 0.2
    want = np.polynomial.polynomial.polyval(x0 + x, c)
    assert np.polyval(jet[::-1], x) == pytest.approx(want)
    assert jet[4] == 0 and jet[5] == 0
