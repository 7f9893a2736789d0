"""Initial value problems for the quasi-derivative system.

The basis solutions are integrated as a vector of lanes: every entry of
``z`` is an independent spectral parameter, and all lanes advance with a
shared step so that coefficient evaluations are amortised.  The stepper is an
embedded 8(5,3) Runge-Kutta pair (Dormand-Prince tableau taken from scipy)
with mandatory step breaks at coefficient discontinuities.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import DOP853

from .errors import IntegrationError
from .problem import Coupled, Separated, SLProblem

RTOL = 1e-12
ATOL = 1e-14
MAX_STEPS = 2_000_000

_A = DOP853.A
_B = DOP853.B
_C = DOP853.C
_E3 = DOP853.E3
_E5 = DOP853.E5
_NS = DOP853.n_stages
# stage abscissae followed by the step end point
_XS = np.append(_C, 1.0)


def _inside(lo, hi):
    return np.nextafter(lo, hi), np.nextafter(hi, lo)


def dop853(f, x0, x1, y0, *, rtol=RTOL, atol=ATOL, breaks=(), pre=None, h0=None,
           max_steps=MAX_STEPS):
    """Integrate ``y' = f(x, y, cv)`` from ``x0`` to ``x1`` (``x1 > x0``).

    ``y0`` may have any shape whose last axis indexes lanes; the step size is
    shared and the error norm is the maximum over lanes.  When ``pre`` is
    given it is called once per step with the 13 abscissae (stages plus the
    end point, clipped into the current smooth segment) and must return an
    array whose column ``i`` is handed to ``f`` as ``cv`` for that abscissa.

    Tolerances are measured against the running amplitude of each component,
    so zero crossings of oscillatory solutions do not force tiny steps.
    """
    y0 = np.asarray(y0)
    shape = y0.shape
    nlanes = shape[-1] if y0.ndim else 1
    y = np.array(y0, dtype=np.result_type(y0, float)).ravel()
    if x1 <= x0:
        return y.reshape(shape)
    pts = [x0] + [float(b) for b in breaks if x0 < b < x1] + [x1]
    amp = np.abs(y)
    h = h0 if h0 is not None else (x1 - x0) / 16
    K = np.empty((_NS + 1, y.size), dtype=y.dtype)
    A = [_A[s, :s].copy() for s in range(_NS)]

    def call(x, yy, cv, s):
        return f(x, yy.reshape(shape), None if cv is None else cv[:, s]).ravel()

    steps = 0
    for lo, hi in zip(pts[:-1], pts[1:]):
        lo_in, hi_in = _inside(lo, hi)
        x = lo
        fresh = True
        while x < hi:
            h = min(h, hi - x)
            last = x + h >= hi or (hi - (x + h)) < 1e-13 * (hi - lo)
            if last:
                h = hi - x
            xs = np.clip(x + _XS * h, lo_in, hi_in)
            cv = pre(xs) if pre is not None else None
            if fresh:
                K[0] = call(xs[0], y, cv, 0)
                fresh = False
            for s in range(1, _NS):
                K[s] = call(xs[s], y + (A[s] @ K[:s]) * h, cv, s)
            y_new = y + (_B @ K[:_NS]) * h
            K[_NS] = call(xs[_NS], y_new, cv, _NS)

            scale = atol + rtol * np.maximum(amp, np.abs(y_new))
            err5 = (np.abs(_E5 @ K) / scale).reshape(-1, nlanes).max(axis=0)
            err3 = (np.abs(_E3 @ K) / scale).reshape(-1, nlanes).max(axis=0)
            with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
                lane = np.where(err5 > 0, abs(h) * err5 ** 2 / np.sqrt(err5 ** 2 + 0.01 * err3 ** 2), 0.0)
            err = float(np.max(lane)) if lane.size else 0.0
            if not np.isfinite(err):
                raise IntegrationError(f"non-finite solution near x={x!r}", location=x)
            if err < 1.0:
                x = hi if last else x + h
                y = y_new
                np.maximum(amp, np.abs(y), out=amp)
                K[0] = K[_NS]
                factor = 10.0 if err == 0 else min(10.0, 0.9 * err ** (-1 / 8))
                h = h * factor
            else:
                h = h * max(0.2, 0.9 * err ** (-1 / 8))
                if h < 1e-15 * max(1.0, abs(x)):
                    raise IntegrationError(f"step size underflow near x={x!r}", location=x)
            steps += 1
            if steps > max_steps:
                raise IntegrationError(f"step budget exhausted near x={x!r}", location=x)
    return y.reshape(shape)


def _sl_pre(problem: SLProblem):
    p, q, r = problem.p, problem.q, problem.r

    def pre(xs):
        return np.vstack([1.0 / np.asarray(p(xs), dtype=float),
                          np.asarray(q(xs), dtype=float),
                          np.asarray(r(xs), dtype=float)])
    return pre


def _initial_step(problem, z, lo, hi):
    xm = 0.5 * (lo + hi)
    pr = float(problem.r(xm)) / float(problem.p(xm))
    zmax = float(np.max(np.abs(z))) if np.size(z) else 0.0
    rate = math.sqrt(zmax * abs(pr) + abs(float(problem.q(xm))) / float(problem.p(xm)))
    return min(hi - lo, 0.25 / (1.0 + rate))


def _sl_integrate(problem, z, x0, x1, y, *, rtol=RTOL, atol=ATOL, max_steps=MAX_STEPS):
    """DOP853 on rows (θ, θ^[1], φ, φ^[1][, derivatives]) x lanes, using the compiled step."""
    from . import _kernels as kern

    y = np.ascontiguousarray(y)
    if x1 <= x0:
        return y
    z = np.ascontiguousarray(np.broadcast_to(z, y.shape[1:]), dtype=y.dtype)
    pre = _sl_pre(problem)
    pts = [x0] + [float(b) for b in problem.breakpoints() if x0 < b < x1] + [x1]
    amp = np.abs(y)
    h = _initial_step(problem, z, x0, x1)
    K = np.empty((_NS + 1,) + y.shape, dtype=y.dtype)
    steps = 0
    for lo, hi in zip(pts[:-1], pts[1:]):
        lo_in, hi_in = _inside(lo, hi)
        x = lo
        fresh = True
        while x < hi:
            h = min(h, hi - x)
            last = x + h >= hi or (hi - (x + h)) < 1e-13 * (hi - lo)
            if last:
                h = hi - x
            cv = np.ascontiguousarray(pre(np.clip(x + _XS * h, lo_in, hi_in)))
            if fresh:
                K[0] = kern.sl_rhs(y, cv[0, 0], cv[1, 0], cv[2, 0], z)
                fresh = False
            y_new, err = kern.sl_step(y, h, cv, z, K, amp, rtol, atol,
                                      kern._A, kern._B, kern._E3, kern._E5)
            if not math.isfinite(err):
                raise IntegrationError(f"non-finite solution near x={x!r}", location=x)
            if err < 1.0:
                x = hi if last else x + h
                y = y_new
                np.maximum(amp, np.abs(y), out=amp)
                K[0] = K[_NS]
                h = h * (10.0 if err == 0 else min(10.0, 0.9 * err ** (-1 / 8)))
            else:
                h = h * max(0.2, 0.9 * err ** (-1 / 8))
                if h < 1e-15 * max(1.0, abs(x)):
                    raise IntegrationError(f"step size underflow near x={x!r}", location=x)
            steps += 1
            if steps > max_steps:
                raise IntegrationError(f"step budget exhausted near x={x!r}", location=x)
    return y


def propagate(problem: SLProblem, z, x0, x1, y0, *, rtol=RTOL, atol=ATOL):
    """Advance states of shape ``(2, 2, nz)`` (solution, [value, quasi], lane) from x0 to x1."""
    y0 = np.asarray(y0)
    z = np.atleast_1d(np.asarray(z))
    dtype = np.result_type(y0, z, float)
    y = _sl_integrate(problem, z, x0, x1, y0.reshape(4, -1).astype(dtype), rtol=rtol, atol=atol)
    return y.reshape(y0.shape)


@dataclass(frozen=True)
class BasisValues:
    """θ, θ^[1], φ, φ^[1] at ``at_x`` for spectral parameter(s) ``at_z``."""

    theta: object
    theta_quasi: object
    phi: object
    phi_quasi: object
    at_x: float
    at_z: object

    @property
    def wronskian(self):
        return self.theta * self.phi_quasi - self.theta_quasi * self.phi


def integrate_basis(problem: SLProblem, z, x_target=None, *, rtol=RTOL, atol=ATOL) -> BasisValues:
    """Basis solutions normalised at ``a``, evaluated at ``x_target`` (default ``b``).

    ``z`` may be a scalar or an array; real input keeps the computation real.
    """
    x_target = problem.b if x_target is None else float(x_target)
    if not problem.a <= x_target <= problem.b:
        raise ValueError(f"x_target={x_target} outside [{problem.a}, {problem.b}]")
    scalar = np.ndim(z) == 0
    zz = np.atleast_1d(np.asarray(z))
    if zz.dtype.kind not in "fc":
        zz = zz.astype(float)
    y0 = np.zeros((2, 2, zz.size), dtype=zz.dtype)
    y0[0, 0] = 1.0
    y0[1, 1] = 1.0
    y = propagate(problem, zz, problem.a, x_target, y0, rtol=rtol, atol=atol)
    parts = [y[0, 0], y[0, 1], y[1, 0], y[1, 1]]
    if scalar:
        parts = [v[0].item() for v in parts]
        zz = zz[0].item()
    return BasisValues(*parts, at_x=x_target, at_z=zz)


def boundary_form(bc, theta, theta_quasi, phi, phi_quasi):
    """The part of the characteristic function that is linear in the basis values.

    For separated conditions this is the whole characteristic function.  For
    coupled ones it is ``R12 θ^[1] - R22 θ + R21 φ - R11 φ^[1]``; the full
    function is ``e^{iφ} (form) + e^{2iφ} + 1``.
    """
    if isinstance(bc, Separated):
        ca, sa = math.cos(bc.alpha), math.sin(bc.alpha)
        cb, sb = math.cos(bc.beta), math.sin(bc.beta)
        return ca * (cb * phi - sb * phi_quasi) - sa * (cb * theta - sb * theta_quasi)
    if isinstance(bc, Coupled):
        (r11, r12), (r21, r22) = bc.R
        return r12 * theta_quasi - r22 * theta + r21 * phi - r11 * phi_quasi
    raise TypeError(f"not a boundary condition: {bc!r}")


def characteristic_from_basis(bc, bv: BasisValues):
    lin = boundary_form(bc, bv.theta, bv.theta_quasi, bv.phi, bv.phi_quasi)
    if isinstance(bc, Coupled):
        e = cmath.exp(1j * bc.phi)
        return e * lin + e * e + 1
    return lin


def characteristic_value(problem: SLProblem, bc, z, **kw):
    """The characteristic function at ``z`` (scalar or array)."""
    bv = integrate_basis(problem, np.asarray(z, dtype=complex) if np.ndim(z) else complex(z), **kw)
    return characteristic_from_basis(bc, bv)


def reduced_characteristic(problem: SLProblem, bc, t, **kw):
    """Real-valued function with the same zeros (and orders) as the characteristic function.

    Separated conditions return the characteristic function itself; coupled
    ones return ``e^{-iφ} F = form + 2 cos φ``.
    """
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    bv = integrate_basis(problem, tt, **kw)
    out = boundary_form(bc, bv.theta, bv.theta_quasi, bv.phi, bv.phi_quasi)
    if isinstance(bc, Coupled):
        out = out + 2 * math.cos(bc.phi)
    return float(out[0]) if scalar else out


def reduced_characteristic_and_derivative(problem: SLProblem, bc, t, *, rtol=RTOL, atol=ATOL):
    """Reduced characteristic function and its t-derivative on an array of real ``t``.

    The derivative comes from the variational equations integrated alongside
    the basis, so it carries the same accuracy as the function values.
    """
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    y0 = np.zeros((8, tt.size))
    y0[0] = 1.0
    y0[3] = 1.0
    y = _sl_integrate(problem, tt, problem.a, problem.b, y0, rtol=rtol, atol=atol).reshape(4, 2, -1)
    G = boundary_form(bc, y[0, 0], y[0, 1], y[1, 0], y[1, 1])
    dG = boundary_form(bc, y[2, 0], y[2, 1], y[3, 0], y[3, 1])
    if isinstance(bc, Coupled):
        G = G + 2 * math.cos(bc.phi)
    return G, dG
