"""Spectral zeta values, traces and determinants for regular Sturm-Liouville problems."""

from .charseries import CharSeries, assemble, assemble_coupled, assemble_separated, detect_zero_multiplicity
from .errors import (ConfigurationError, DegenerateBoundaryError, DegenerateSeriesError, IntegrationError,
                     MissingDependencyError, NumericalDegeneracyError, PreconditionError, RefinementError,
                     SLZetaError, TruncationError, UnboundedBelowError)
from .ivp import (BasisValues, characteristic_value, integrate_basis, reduced_characteristic,
                  reduced_characteristic_and_derivative)
from .liouville import (LiouvilleData, asymptotic_log_F, asymptotic_series, boundary_coeffs, gamma_data,
                        gamma_sequence, liouville_transform, riccati_jet, transformed_bc,
                        transformed_characteristic, zeta_prime_zero)
from .oracle import Spectrum, count_negative, find_eigenvalues, zeta_partial
from .problem import (Constant, Coupled, Interval, PiecewiseConstant, Polynomial, Separated, SLProblem,
                      Tabulated, bc_from_dict, resolve_named_bc, schroedinger, validate_basic,
                      validate_liouville)
from .volterra import SeriesAtB, compute_series
from .zeta import ZetaReport, log_series, trace_inverse, zeta_integers

__version__ = "0.1.0"


def determinant(problem, bc, series=None, K=None):
    """ζ'(0) and the ζ-regularised determinant, with n_neg supplied by the oracle."""
    series = series if series is not None else compute_series(problem, **({"K": K} if K else {}))
    cs = assemble(series, bc)
    ld = liouville_transform(problem)
    gd = gamma_data(ld, bc)
    return zeta_prime_zero(cs, gd, ld.c, count_negative(problem, bc))
