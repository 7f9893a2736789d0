"""Spectral zeta values at positive integers from the characteristic-series coefficients.

With ``F(z) = a_{m0} z^{m0} (1 + Σ_{j≥1} (a_{j+m0}/a_{m0}) z^j)`` and
``ln(1 + Σ c_j z^j) = Σ b_j z^j`` one has ``ζ(n) = -n b_n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .charseries import CharSeries
from .errors import NumericalDegeneracyError, PreconditionError, TruncationError

IMAG_TOL = 1e-9


def log_series(c):
    """Taylor coefficients ``d_1..d_M`` of ``ln(1 + Σ_{m=1}^M c_m z^m)``.

    ``c[0]`` is the coefficient of ``z``.
    """
    c = np.asarray(c)
    M = len(c)
    d = np.zeros(M, dtype=np.result_type(c, float))
    for j in range(1, M + 1):
        ell = np.arange(1, j)
        d[j - 1] = c[j - 1] - np.sum(ell / j * c[j - ell - 1] * d[ell - 1])
    return d


def exp_series(d):
    """Inverse of :func:`log_series`: coefficients of ``exp(Σ d_m z^m) - 1``."""
    d = np.asarray(d)
    M = len(d)
    e = np.zeros(M + 1, dtype=np.result_type(d, float))
    e[0] = 1.0
    for j in range(1, M + 1):
        ell = np.arange(1, j + 1)
        e[j] = np.sum(ell * d[ell - 1] * e[j - ell]) / j
    return e[1:]


def _realify(values, what):
    values = np.asarray(values)
    if np.iscomplexobj(values):
        ref = np.maximum(np.abs(values), np.finfo(float).tiny)
        bad = np.abs(values.imag) > IMAG_TOL * ref
        if np.any(bad):
            j = int(np.nonzero(bad)[0][0])
            raise NumericalDegeneracyError(
                f"{what} at index {j + 1} has imaginary part {values.imag[j]:.3e} "
                f"(relative {abs(values.imag[j]) / ref[j]:.3e})")
        return values.real.copy()
    return values.astype(float)


@dataclass(frozen=True)
class ZetaReport:
    values: dict
    m0: int
    trace_inverse: float | None
    b: np.ndarray = field(repr=False)

    def __getitem__(self, n):
        return self.values[n]


def zeta_integers(cs: CharSeries, n_max: int) -> ZetaReport:
    """ζ(1), ..., ζ(n_max) from the normalised tail ``a_{j+m0}/a_{m0}``."""
    if n_max < 1:
        raise PreconditionError("n_max must be at least 1")
    need = n_max + cs.m0
    if cs.K < need:
        raise TruncationError(f"ζ({n_max}) needs coefficients through a_{need}; series has K={cs.K}",
                              required_order=need)
    a = np.asarray(cs.a)
    c = a[cs.m0 + 1:need + 1] / a[cs.m0]
    b = _realify(log_series(c), "b_j")
    values = {n: float(-n * b[n - 1]) for n in range(1, n_max + 1)}
    tr = values[1] if cs.m0 == 0 else None
    return ZetaReport(values=values, m0=cs.m0, trace_inverse=tr, b=b)


def trace_inverse(cs: CharSeries) -> float:
    """Trace of the inverse operator, ``-a_1/a_0``; zero must not be an eigenvalue."""
    if cs.m0 != 0:
        raise PreconditionError("trace of inverse undefined; zero is an eigenvalue")
    return float(_realify(np.array([-cs.a[1] / cs.a[0]]), "trace")[0])
