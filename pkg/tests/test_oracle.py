import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import PI, case
from slzeta import (Interval, PiecewiseConstant, SLProblem, Separated, count_negative, find_eigenvalues,
                    resolve_named_bc, schroedinger, zeta_partial)
from slzeta import oracle
from slzeta.errors import NumericalDegeneracyError, UnboundedBelowError
from slzeta.oracle import Spectrum


def test_dirichlet_free():
    sp = find_eigenvalues(schroedinger(0, 1), Separated(0, 0), 30)
    np.testing.assert_allclose(sp.eigenvalues, (np.arange(1, 31) * PI) ** 2, rtol=1e-10)
    assert np.all(sp.multiplicities == 1)


def test_periodic_multiplicities():
    sp = find_eigenvalues(schroedinger(0, 1), resolve_named_bc("periodic"), 41)
    assert sp.zero_multiplicity() == 1
    assert abs(sp.eigenvalues[0]) <= sp.zero_tol
    np.testing.assert_allclose(sp.eigenvalues[1:], (2 * np.arange(1, 21) * PI) ** 2, rtol=1e-10)
    assert np.all(sp.multiplicities[1:] == 2)


def test_constant_shift():
    V0, L = 3.5, 2.0
    sp = find_eigenvalues(schroedinger(0, L, V0), Separated(0, 0), 10)
    np.testing.assert_allclose(sp.eigenvalues, (np.arange(1, 11) * PI / L) ** 2 + V0, rtol=1e-10)


@pytest.mark.parametrize("V0,expected", [(0.0, 0), (2 * PI ** 2, 1), (PI ** 2 / 4, 0), (10 * PI ** 2, 3)])
def test_count_negative_dirichlet(V0, expected):
    assert count_negative(schroedinger(0, 1, -V0), Separated(0, 0)) == expected


def test_smallest_eigenvalue_with_attractive_potential():
    sp = find_eigenvalues(schroedinger(0, 1, -PI ** 2 / 4), Separated(0, 0), 1)
    assert sp.eigenvalues[0] == pytest.approx(0.75 * PI ** 2, rel=1e-10)


@pytest.mark.parametrize("name", ["dirichlet", "neumann", "periodic", "antiperiodic"])
def test_count_negative_free_problem_is_zero(name):
    assert count_negative(schroedinger(0, 1), resolve_named_bc(name)) == 0


def test_count_negative_krein_is_zero():
    problem, bc, _ = case("free-krein")
    assert count_negative(problem, bc) == 0


def test_zeta_partial_single_eigenvalue():
    sp = Spectrum(np.array([PI ** 2]), np.array([1]), -1.0, 1)
    est, tail = zeta_partial(sp, 1, 1.0)
    assert est == pytest.approx(1 / PI ** 2)
    assert tail > 0


def test_zeta_partial_dirichlet_n2():
    sp = find_eigenvalues(schroedinger(0, 1), Separated(0, 0), 100)
    est, tail = zeta_partial(sp, 2, 1.0)
    assert abs(est - 1 / 90) <= tail


def test_tail_warning():
    sp = find_eigenvalues(schroedinger(0, 1), Separated(0, 0), 5)
    with pytest.warns(RuntimeWarning):
        zeta_partial(sp, 1, 1.0, tol=1e-4)


def test_unbounded_below_detection(monkeypatch):
    monkeypatch.setattr(oracle, "MAX_FLOOR", 0.5)
    with pytest.raises(UnboundedBelowError):
        find_eigenvalues(schroedinger(0, 1, -1e4), Separated(0, 0), 1)


def test_extremely_deep_boundary_state_is_reported():
    # cot(alpha) = 1e6 binds a state near -1e12, out of reach of the scan
    with pytest.raises(NumericalDegeneracyError, match="too far below"):
        find_eigenvalues(schroedinger(0, 1), Separated(1e-6, 0), 3)


def test_non_binding_robin_end_does_not_lower_the_floor():
    near_neumann = find_eigenvalues(schroedinger(0, 1), Separated(math.pi - 1e-6, 0), 1)
    assert near_neumann.search_floor > -10


def test_robin_bound_state_is_found():
    # y'(0) = -4 y(0) binds a state near -16, far below the potential-based floor guess
    alpha = math.atan2(1.0, 4.0)
    sp = find_eigenvalues(schroedinger(0, 1), Separated(alpha, PI / 2), 2)
    k = 4.0 * (1 + 2 * math.exp(-8))  # tanh(k) k = 4 to leading order
    assert sp.eigenvalues[0] < -15
    assert sp.eigenvalues[0] == pytest.approx(-k * k, rel=1e-3)


@pytest.mark.parametrize("name", ["free-dirichlet", "free-periodic", "well", "variable-coupled", "linear"])
def test_weyl_fit_at_50(name):
    problem, bc, _ = case(name)
    lam = find_eigenvalues(problem, bc, 50).flat()[49]
    c = oracle._weyl_c(problem)
    assert abs(lam * c * c / (PI ** 2 * 2500) - 1) < 0.1


# angles just above 0 bind states near -cot² and are covered by the test above
ANGLES = st.one_of(st.just(0.0), st.floats(0.01, math.pi))


@settings(max_examples=8)
@given(st.floats(0.2, 0.8), st.floats(-30, 30), ANGLES, ANGLES)
def test_spectrum_invariants(cut, V, alpha, beta):
    problem = SLProblem(Interval(0, 1), q=PiecewiseConstant((cut,), (0.0, V)))
    sp = find_eigenvalues(problem, Separated(alpha, beta), 12)
    assert np.all(np.diff(sp.eigenvalues) > 0)
    assert np.all(sp.multiplicities == 1)
    assert sp.count >= 12
    assert sp.search_floor < sp.eigenvalues[0]
