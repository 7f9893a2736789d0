"""Small-z Taylor coefficients of the characteristic function."""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSeriesError, NumericalDegeneracyError, PreconditionError
from .ivp import boundary_form
from .problem import Coupled, Separated
from .volterra import SeriesAtB

ZERO_THRESHOLD = 1e-9


@dataclass(frozen=True)
class CharSeries:
    """Coefficients ``a[j]`` of ``F(z) = Σ a_j z^j`` and the order ``m0`` of the zero at z = 0."""

    a: np.ndarray
    m0: int
    scale: float
    bc: object

    @property
    def leading(self):
        return self.a[self.m0]

    @property
    def K(self):
        return len(self.a) - 1


def detect_zero_multiplicity(a, scale=None, threshold=ZERO_THRESHOLD) -> int:
    """Index of the first coefficient above ``threshold * scale``.

    Eigenvalue multiplicities of these problems never exceed two, so a larger
    index means the threshold or the series is at fault.
    """
    a = np.asarray(a)
    if len(a) < 3:
        raise PreconditionError("zero detection needs at least three coefficients")
    scale = float(np.max(np.abs(a))) if scale is None else float(scale)
    if scale == 0:
        raise DegenerateSeriesError("all characteristic-series coefficients vanish")
    above = np.nonzero(np.abs(a) > threshold * scale)[0]
    if not len(above):
        raise DegenerateSeriesError("all characteristic-series coefficients are below threshold")
    m0 = int(above[0])
    if m0 > 2:
        raise NumericalDegeneracyError(
            f"zero of order {m0} at z=0 exceeds the possible multiplicity 2; check tolerances")
    return m0


def _finish(a, bc, threshold, max_m0):
    scale = float(np.max(np.abs(a)))
    m0 = detect_zero_multiplicity(a, scale, threshold)
    if m0 > max_m0:
        raise NumericalDegeneracyError(
            f"zero of order {m0} at z=0 is impossible for {type(bc).__name__.lower()} conditions")
    return CharSeries(a=a, m0=m0, scale=scale, bc=bc)


def assemble_separated(series: SeriesAtB, alpha: float, beta: float,
                       threshold: float = ZERO_THRESHOLD) -> CharSeries:
    if series.K < 2:
        raise PreconditionError("separated assembly needs K >= 2")
    bc = Separated(alpha, beta)
    a = boundary_form(bc, series.theta_k, series.theta_quasi_k, series.phi_k, series.phi_quasi_k)
    return _finish(np.asarray(a, dtype=float), bc, threshold, max_m0=1)


def assemble_coupled(series: SeriesAtB, phi: float, R, threshold: float = ZERO_THRESHOLD) -> CharSeries:
    if series.K < 2:
        raise PreconditionError("coupled assembly needs K >= 2")
    bc = Coupled(phi, R)
    e = cmath.exp(1j * bc.phi)
    lin = boundary_form(bc, series.theta_k, series.theta_quasi_k, series.phi_k, series.phi_quasi_k)
    a = e * np.asarray(lin, dtype=complex)
    a[0] += e * e + 1
    return _finish(a, bc, threshold, max_m0=2)


def assemble(series: SeriesAtB, bc, threshold: float = ZERO_THRESHOLD) -> CharSeries:
    if isinstance(bc, Separated):
        return assemble_separated(series, bc.alpha, bc.beta, threshold)
    if isinstance(bc, Coupled):
        return assemble_coupled(series, bc.phi, bc.R, threshold)
    raise TypeError(f"not a boundary condition: {bc!r}")
