import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slzeta import (Constant, Coupled, Interval, PiecewiseConstant, Polynomial, SLProblem, Separated,
                    Tabulated, bc_from_dict, compute_series, resolve_named_bc, schroedinger, validate_basic,
                    validate_liouville)
from slzeta.errors import ConfigurationError, MissingDependencyError
from slzeta.problem import NAMED_BCS, coefficient_from_dict


def test_interval_rejects_reversed_and_infinite():
    with pytest.raises(ConfigurationError):
        Interval(1.0, 0.0)
    with pytest.raises(ConfigurationError):
        Interval(0.0, math.inf)


def test_piecewise_constant_is_right_continuous():
    c = PiecewiseConstant((0.3, 0.7), (0.0, 5.0, 0.0))
    assert c(0.3) == 5.0
    assert c(0.2999999) == 0.0
    assert c(0.7) == 0.0
    np.testing.assert_array_equal(c(np.array([0.1, 0.5, 0.9])), [0.0, 5.0, 0.0])
    assert not c.smooth
    assert PiecewiseConstant((0.5,), (2.0, 2.0)).smooth


def test_polynomial_derivatives_and_taylor():
    p = Polynomial((1.0, -2.0, 3.0))
    assert p(2.0) == pytest.approx(9.0)
    assert p.derivative(2.0) == pytest.approx(10.0)
    assert p.derivative(2.0, 2) == pytest.approx(6.0)
    np.testing.assert_allclose(p.taylor(2.0, 4), [9.0, 10.0, 3.0, 0.0])


def test_tabulated_spline_reproduces_cubic():
    x = np.linspace(0, 1, 9)
    f = lambda t: 1 + t - 2 * t ** 3
    tab = Tabulated(tuple(x), tuple(f(x)))
    t = np.linspace(0, 1, 31)
    np.testing.assert_allclose(tab(t), f(t), atol=1e-12)
    assert tab.smooth and tab.breakpoints == ()


def test_tabulated_linear_has_kinks_as_breakpoints():
    tab = Tabulated((0.0, 0.5, 1.0), (1.0, 2.0, 1.0), order=1)
    assert tab.breakpoints == (0.5,)
    assert not tab.smooth


def test_tabulated_range_must_cover_interval():
    tab = Tabulated((0.0, 0.4, 0.6, 0.8), (1.0, 1.0, 1.0, 1.0))
    problem = SLProblem(Interval(0, 1), r=tab)
    with pytest.raises(ConfigurationError):
        validate_basic(problem)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=5))
def test_coefficient_dict_roundtrip(coefs):
    p = Polynomial(tuple(coefs))
    q = coefficient_from_dict(p.to_dict())
    x = np.linspace(-1, 1, 7)
    np.testing.assert_allclose(q(x), p(x))


def test_coefficient_from_dict_errors():
    with pytest.raises(ConfigurationError):
        coefficient_from_dict({"kind": "spline"})
    with pytest.raises(ConfigurationError):
        coefficient_from_dict({"kind": "polynomial"})
    assert isinstance(coefficient_from_dict(2.5), Constant)


def test_problem_breakpoints_collects_all_coefficients():
    problem = SLProblem(Interval(0, 1), p=PiecewiseConstant((0.25,), (1.0, 2.0)),
                        q=PiecewiseConstant((0.5, 1.5), (0.0, 1.0, 2.0)))
    assert problem.breakpoints() == (0.25, 0.5)


def test_separated_angles_reduced_mod_pi():
    bc = Separated(math.pi + 0.25, -0.5)
    assert bc.alpha == pytest.approx(0.25)
    assert bc.beta == pytest.approx(math.pi - 0.5)


def test_coupled_requires_unit_determinant():
    with pytest.raises(ConfigurationError):
        Coupled(0.0, ((2.0, 0.0), (0.0, 1.0)))
    bc = Coupled(2 * math.pi + 0.1, ((2.0, 1.0), (1.0, 1.0)))
    assert bc.phi == pytest.approx(0.1)


@pytest.mark.parametrize("name", NAMED_BCS)
def test_named_bcs_resolve_and_are_idempotent(name):
    problem = schroedinger(0, 1, Polynomial((0.0, 1.0)))
    base = compute_series(problem, K=3) if "krein" in name else None
    first = resolve_named_bc(name, problem, base)
    second = resolve_named_bc(name, problem, base)
    assert first == second
    if isinstance(first, Coupled):
        assert abs(np.linalg.det(first.matrix) - 1) < 1e-12


def test_krein_needs_base_data():
    with pytest.raises(MissingDependencyError):
        resolve_named_bc("krein-von-neumann")


def test_unknown_name():
    with pytest.raises(ConfigurationError):
        resolve_named_bc("robin")


def test_bc_from_dict_forms():
    assert bc_from_dict("Dirichlet") == Separated(0.0, 0.0)
    assert bc_from_dict({"type": "separated", "alpha": 0.1, "beta": 0.2}) == Separated(0.1, 0.2)
    assert bc_from_dict({"name": "periodic"}).phi == 0.0
    assert bc_from_dict({"type": "coupled", "phi": 0.5, "R": [[1, 0], [3, 1]]}).R == ((1.0, 0.0), (3.0, 1.0))
    with pytest.raises(ConfigurationError):
        bc_from_dict({"alpha": 1.0})


def test_validate_basic_messages():
    bad_r = SLProblem(Interval(0, 1), r=Polynomial((-0.5, 1.0)))
    assert "r > 0 fails" in validate_basic(bad_r).violations
    bad_p = SLProblem(Interval(0, 1), p=Polynomial((1.0, -2.0)))
    assert "p > 0 fails" in validate_basic(bad_p).violations
    assert validate_basic(schroedinger(0, 1)).ok


def test_validate_liouville_flags_jumping_p():
    problem = SLProblem(Interval(0, 1), p=PiecewiseConstant((0.5,), (1.0, 2.0)))
    assert validate_basic(problem).ok
    assert "pr not absolutely continuous" in validate_liouville(problem).violations


coef_strategy = st.one_of(
    st.floats(-3, 3).map(Constant),
    st.lists(st.floats(-2, 2), min_size=1, max_size=4).map(lambda c: Polynomial(tuple(c))),
    st.tuples(st.floats(0.1, 0.9), st.floats(-2, 2), st.floats(-2, 2)).map(
        lambda t: PiecewiseConstant((t[0],), (t[1], t[2]))),
)


@given(coef_strategy, coef_strategy, coef_strategy)
def test_liouville_report_contains_basic_report(p, q, r):
    problem = SLProblem(Interval(0, 1), p, q, r)
    basic = set(validate_basic(problem, samples=256).violations)
    full = validate_liouville(problem, samples=256)
    assert basic <= set(full.violations)
    if full.ok:
        assert not basic
