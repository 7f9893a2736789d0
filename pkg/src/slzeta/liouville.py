"""Liouville transformation, large-z asymptotics and the zeta-regularised determinant.

The transformation ``ξ = (1/c) ∫ √(r/p)``, ``u = (pr)^{1/4} y`` maps the
problem to ``-ü + V u = c² z u`` on ``[0, 1]``.  The large-z expansion of the
characteristic function is driven by the Riccati coefficients ``S_j``, which
are evaluated as truncated Taylor jets of ``V``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .charseries import ZERO_THRESHOLD, CharSeries
from .errors import DegenerateBoundaryError, PreconditionError
from .ivp import ATOL, RTOL, dop853
from .problem import Constant, Coupled, Separated, SLProblem, validate_liouville
from .zeta import log_series

JET_ORDER = 4
_GL_PANELS = 256
_GL_ORDER = 8


# --------------------------------------------------------------------------
# coefficient algebra in x


def _v_of_x(problem: SLProblem, x, c):
    """Transformed potential and Q = (pr)'/r at the points ``x``."""
    p, r, q = problem.p, problem.r, problem.q
    p0, p1, p2 = (np.asarray(p.derivative(x, k), dtype=float) for k in (0, 1, 2))
    r0, r1, r2 = (np.asarray(r.derivative(x, k), dtype=float) for k in (0, 1, 2))
    pr = p0 * r0
    dpr = p1 * r0 + p0 * r1
    ddpr = p2 * r0 + 2 * p1 * r1 + p0 * r2
    Q = dpr / r0
    dQ = ddpr / r0 - dpr * r1 / r0 ** 2
    V = c ** 2 * (-Q ** 2 / (16 * pr) + dQ / (4 * r0) + np.asarray(q(x), dtype=float) / r0)
    return V, Q


def _v_jet_x(problem: SLProblem, x0, n, c):
    """Taylor jet (in x - x0) of V of length ``n``."""
    m = n + 2
    p, q, r = problem.p.taylor(x0, m), problem.q.taylor(x0, m), problem.r.taylor(x0, m)
    pr = jets.mul(p, r)
    Q = jets.div(jets.deriv(pr), r[:m - 1])
    dQ = jets.deriv(Q)
    rr = r[:n]
    V = (-jets.div(jets.mul(Q[:n], Q[:n]), pr[:n]) / 16 + jets.div(dQ, rr) / 4
         + jets.div(q[:n], rr))
    return c ** 2 * V


def _xi_jet_x(problem: SLProblem, x0, n, c):
    """Jet of ξ(x) - ξ(x0) in powers of x - x0."""
    s = jets.power(jets.div(problem.r.taylor(x0, n), problem.p.taylor(x0, n)), 0.5) / c
    return jets.integ(s)


# --------------------------------------------------------------------------
# the change of variables


class _XiMap:
    """ξ(x) by composite Gauss-Legendre quadrature, and its inverse by Newton iteration."""

    def __init__(self, problem: SLProblem):
        self.problem = problem
        a, b = problem.a, problem.b
        edges = [a, *problem.breakpoints(), b]
        pieces = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            n = max(4, int(round(_GL_PANELS * (hi - lo) / (b - a))))
            pieces.append(np.linspace(lo, hi, n + 1)[:-1])
        self.edges = np.append(np.concatenate(pieces), b)
        self.t, self.w = np.polynomial.legendre.leggauss(_GL_ORDER)
        cum = np.array([self._panel(lo, hi) for lo, hi in zip(self.edges[:-1], self.edges[1:])])
        self.cum = np.concatenate([[0.0], np.cumsum(cum)])
        self.c = float(self.cum[-1])

    def _density(self, x):
        return np.sqrt(np.asarray(self.problem.r(x), dtype=float) / np.asarray(self.problem.p(x), dtype=float))

    def _panel(self, lo, hi):
        half = 0.5 * (hi - lo)
        return half * np.dot(self.w, self._density(0.5 * (hi + lo) + half * self.t))

    def integral(self, x):
        """∫_a^x √(r/p) for an array of x."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, len(self.edges) - 2)
        lo = self.edges[idx]
        half = 0.5 * (x - lo)
        nodes = (lo + half)[:, None] + half[:, None] * self.t[None, :]
        vals = self._density(nodes.ravel()).reshape(nodes.shape)
        return self.cum[idx] + half * (vals @ self.w)

    def xi(self, x):
        return self.integral(x) / self.c

    def x(self, xi):
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        target = xi * self.c
        x = np.interp(target, self.cum, self.edges)
        for _ in range(8):
            x = np.clip(x - (self.integral(x) - target) / self._density(x), self.problem.a, self.problem.b)
        return x


@dataclass(frozen=True)
class LiouvilleData:
    problem: SLProblem
    c: float
    nu0: float
    nu1: float
    Q0: float
    Q1: float
    xi_nodes: np.ndarray
    V_values: np.ndarray
    V_jet0: np.ndarray
    V_jet1: np.ndarray
    xi_breaks: tuple = ()
    _map: object = field(default=None, repr=False, compare=False)

    def xi_of_x(self, x):
        return self._map.xi(x)

    def x_of_xi(self, xi):
        return self._map.x(xi)

    def V(self, xi):
        """Transformed potential at arbitrary ξ in [0, 1]."""
        return _v_of_x(self.problem, self.x_of_xi(xi), self.c)[0]

    def V_jet(self, xi0, n):
        """Taylor coefficients of V in powers of (ξ - ξ0), length ``n``."""
        x0 = float(self.x_of_xi(xi0)[0])
        vx = _v_jet_x(self.problem, x0, n, self.c)
        h = jets.revert(_xi_jet_x(self.problem, x0, n, self.c))
        return jets.compose(vx, h)


def liouville_transform(problem: SLProblem, jet_order: int = JET_ORDER, *, check: bool = True,
                        samples: int = 257) -> LiouvilleData:
    """Transformed-problem data; ``V_jet0``/``V_jet1`` hold derivatives of order 0..jet_order."""
    if check:
        report = validate_liouville(problem)
        if not report.ok:
            raise PreconditionError("Liouville hypotheses fail: " + "; ".join(report.violations))
    xm = _XiMap(problem)
    c = xm.c
    a, b = problem.a, problem.b
    nu0, nu1 = (float(problem.p(x) * problem.r(x)) ** 0.25 for x in (a, b))
    _, Q = _v_of_x(problem, np.array([a, b]), c)
    nodes = np.linspace(0.0, 1.0, samples)
    V_values = _v_of_x(problem, xm.x(nodes), c)[0]
    xi_breaks = tuple(float(v) for v in xm.xi(problem.breakpoints())) if problem.breakpoints() else ()
    ld = LiouvilleData(problem=problem, c=c, nu0=nu0, nu1=nu1, Q0=float(Q[0]), Q1=float(Q[1]),
                       xi_nodes=nodes, V_values=V_values, V_jet0=np.zeros(0), V_jet1=np.zeros(0),
                       xi_breaks=xi_breaks, _map=xm)
    n = jet_order + 1
    j0 = jets.to_derivatives(ld.V_jet(0.0, n))
    j1 = jets.to_derivatives(ld.V_jet(1.0, n))
    object.__setattr__(ld, "V_jet0", j0)
    object.__setattr__(ld, "V_jet1", j1)
    return ld


# --------------------------------------------------------------------------
# boundary data


@dataclass(frozen=True)
class TransformedSeparated:
    """Rows ``(coefficient of v, coefficient of v̇)`` at ξ = 0 and ξ = 1."""

    row0: tuple
    row1: tuple


@dataclass(frozen=True)
class TransformedCoupled:
    phi: float
    R: np.ndarray

    @property
    def det(self):
        return float(np.linalg.det(self.R))


def transformed_bc(ld: LiouvilleData, bc):
    c, n0, n1, Q0, Q1 = ld.c, ld.nu0, ld.nu1, ld.Q0, ld.Q1
    if isinstance(bc, Separated):
        sa, ca = math.sin(bc.alpha), math.cos(bc.alpha)
        sb, cb = math.sin(bc.beta), math.cos(bc.beta)
        return TransformedSeparated(
            row0=((ca - sa * Q0 / 4) / n0, n0 * sa / c),
            row1=((cb + sb * Q1 / 4) / n1, -n1 * sb / c),
        )
    if isinstance(bc, Coupled):
        (R11, R12), (R21, R22) = bc.R
        Rt = np.array([
            [n1 / n0 * (R11 - Q0 * R12 / 4), n0 * n1 * R12 / c],
            [c / (n0 * n1) * (R21 - Q0 * R22 / 4 + Q1 * R11 / 4 - Q0 * Q1 * R12 / 16),
             n0 / n1 * (R22 + Q1 * R12 / 4)],
        ])
        return TransformedCoupled(bc.phi, Rt)
    raise TypeError(f"not a boundary condition: {bc!r}")


def boundary_coeffs(ld: LiouvilleData, bc):
    """The coefficients (j, k, l, m) multiplying 1, S+(z,0), S-(z,1) and their product."""
    c, n0, n1, Q0, Q1 = ld.c, ld.nu0, ld.nu1, ld.Q0, ld.Q1
    if isinstance(bc, Separated):
        sa, ca = math.sin(bc.alpha), math.cos(bc.alpha)
        sb, cb = math.sin(bc.beta), math.cos(bc.beta)
        left = ca - sa * Q0 / 4
        right = cb + sb * Q1 / 4
        return (complex(-c / (n0 * n1) * right * left), complex(-n0 / n1 * sa * right),
                complex(n1 / n0 * sb * left), complex(n0 * n1 * sa * sb / c))
    tb = transformed_bc(ld, bc)
    e = cmath.exp(1j * tb.phi)
    R = tb.R
    return (-e * R[1, 0], -e * R[1, 1], e * R[0, 0], e * R[0, 1])


# --------------------------------------------------------------------------
# transformed initial value problem


def transformed_basis(ld: LiouvilleData, z, *, rtol=RTOL, atol=ATOL):
    """(Θ, Θ̇, Φ, Φ̇) at ξ = 1 for the spectral parameter(s) ``z``."""
    problem, c = ld.problem, ld.c
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    y = np.zeros((3, 2, zz.size), dtype=complex)
    y[0, 0] = ld.nu0
    y[0, 1] = c * ld.Q0 / (4 * ld.nu0)
    y[1, 1] = c / ld.nu0
    y[2, 0] = problem.a
    xb = [problem.a, *problem.breakpoints(), problem.b]
    xib = [0.0, *ld.xi_breaks, 1.0]
    smooth_map = isinstance(problem.p, Constant) and isinstance(problem.r, Constant)
    slope = c * math.sqrt(float(problem.p(problem.a)) / float(problem.r(problem.a)))

    def f(xi, Y, cv):
        if smooth_map:
            x = problem.a + slope * xi
        else:
            x = Y[2, 0, 0].real
        k = min(max(np.searchsorted(xib, xi, side="right") - 1, 0), len(xb) - 2)
        lo, hi = np.nextafter(xb[k], xb[k + 1]), np.nextafter(xb[k + 1], xb[k])
        x = min(max(x, lo), hi)
        V = float(_v_of_x(problem, np.array([x]), c)[0][0])
        out = np.empty_like(Y)
        out[:2, 0] = Y[:2, 1]
        out[:2, 1] = (V - c * c * zz) * Y[:2, 0]
        out[2, 0] = c * math.sqrt(float(problem.p(x)) / float(problem.r(x)))
        out[2, 1] = 0.0
        return out

    rate = math.sqrt(float(np.max(np.abs(zz)))) * c + 1.0
    Y = dop853(f, 0.0, 1.0, y, rtol=rtol, atol=atol, breaks=ld.xi_breaks, h0=0.25 / rate)
    out = (Y[0, 0], Y[0, 1], Y[1, 0], Y[1, 1])
    if np.ndim(z) == 0:
        out = tuple(complex(v[0]) for v in out)
    return out


def transformed_characteristic(ld: LiouvilleData, bc, z, **kw):
    """Characteristic function assembled from the transformed basis at ξ = 1."""
    Th, dTh, Ph, dPh = transformed_basis(ld, z, **kw)
    c, n0, n1, Q0, Q1 = ld.c, ld.nu0, ld.nu1, ld.Q0, ld.Q1
    if isinstance(bc, Separated):
        sa, ca = math.sin(bc.alpha), math.cos(bc.alpha)
        sb, cb = math.sin(bc.beta), math.cos(bc.beta)
        right = (cb + sb * Q1 / 4) / n1
        return (sa * (n1 * sb / c * dTh - right * Th)
                + ca * (-n1 * sb / c * dPh + right * Ph))
    tb = transformed_bc(ld, bc)
    R = tb.R
    e = cmath.exp(1j * tb.phi)
    return e * (2 * math.cos(tb.phi)
                - (n0 / c * R[0, 0] + Q0 / (4 * n0) * R[0, 1]) * dPh
                + (n0 / c * R[1, 0] + Q0 / (4 * n0) * R[1, 1]) * Ph
                + R[0, 1] / n0 * dTh - R[1, 1] / n0 * Th)


# --------------------------------------------------------------------------
# Riccati coefficients and large-z data


def riccati_jets(V_taylor, c, J):
    """Jets of S_1..S_J at a point from the Taylor coefficients of V there.

    ``S_j`` is returned with ``len(V_taylor) - j + 1`` coefficients.
    """
    V_taylor = np.asarray(V_taylor, dtype=complex)
    if len(V_taylor) < J:
        raise PreconditionError(f"S_1..S_{J} need V derivatives through order {J - 1}")
    f = 1j / (2 * c)
    S = [f * V_taylor]
    for j in range(1, J):
        n = len(S[-1]) - 1
        acc = jets.deriv(S[-1])
        for k in range(1, j):
            acc = acc + jets.mul(S[k - 1][:n], S[j - k - 1][:n])
        S.append(-f * acc)
    return S


def riccati_jet(V_jet, c, J):
    """Values S_1..S_J at a point, from derivative values ``V_jet = [V, V̇, V̈, ...]``."""
    S = riccati_jets(jets.from_derivatives(np.asarray(V_jet, dtype=float)[:J]), c, J)
    return np.array([s[0] for s in S])


@dataclass(frozen=True)
class AsymptoticSeries:
    """Endpoint values and integrals of S_j plus the derived D, Λ sequences (1-based lists)."""

    c: float
    S0: np.ndarray
    S1: np.ndarray
    intS: np.ndarray
    D: np.ndarray
    Lambda: dict

    @property
    def order(self):
        return len(self.S0)

    def Omega_minus0(self, j):
        return 1.0 if j == 0 else (-1) ** j * 1j / self.c * (self.S0[j - 2] if j >= 2 else 0.0)

    def Omega_plus1(self, j):
        return 1.0 if j == 0 else 1j / self.c * (self.S1[j - 2] if j >= 2 else 0.0)


def _integrate_S(ld: LiouvilleData, J, nodes_per_segment=24):
    t, w = np.polynomial.legendre.leggauss(nodes_per_segment)
    edges = [0.0, *ld.xi_breaks, 1.0]
    total = np.zeros(J, dtype=complex)
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        for tk, wk in zip(t, w):
            xi = 0.5 * (lo + hi) + half * tk
            S = riccati_jets(ld.V_jet(xi, J), ld.c, J)
            total += half * wk * np.array([s[0] for s in S])
    return total


def asymptotic_series(ld: LiouvilleData, order: int = JET_ORDER + 1) -> AsymptoticSeries:
    """S_j(0), S_j(1), ∫S_j for j = 1..order, with D_n and Λ_m derived from them."""
    J = order
    S0 = np.array([s[0] for s in riccati_jets(ld.V_jet(0.0, J), ld.c, J)])
    S1 = np.array([s[0] for s in riccati_jets(ld.V_jet(1.0, J), ld.c, J)])
    intS = _integrate_S(ld, J)
    odd = S0[0::2]  # S_1, S_3, ...
    D = log_series(1j / ld.c * odd)
    asy = AsymptoticSeries(c=ld.c, S0=S0, S1=S1, intS=intS, D=D, Lambda={})
    for m in range(2, J + 2):
        asy.Lambda[m] = sum(asy.Omega_minus0(l) * asy.Omega_plus1(m - l) for l in range(m + 1))
    return asy


@dataclass(frozen=True)
class GammaData:
    j: complex
    k: complex
    l: complex
    m: complex
    Gamma: dict
    k0: int

    @property
    def leading(self):
        return self.Gamma[self.k0]

    def Pi(self):
        """Π_1, Π_2, ... from the Γ-sequence normalised by Γ_{k0}."""
        top = max(self.Gamma)
        c = np.array([self.Gamma[m + self.k0] / self.Gamma[self.k0] for m in range(1, top - self.k0 + 1)])
        return log_series(c) if len(c) else np.zeros(0, dtype=complex)


def gamma_sequence(coeffs, ld: LiouvilleData, asy: AsymptoticSeries, M: int = 2,
                   threshold: float = ZERO_THRESHOLD) -> GammaData:
    """Γ_{-2}..Γ_M and the index k0 of the first non-vanishing one."""
    jj, kk, ll, mm = (complex(v) for v in coeffs)
    c = ld.c
    if M + 1 > asy.order:
        raise PreconditionError(f"Γ_{M} needs S_j through j = {M + 1}; series has {asy.order}")
    G = {-2: mm * c * c, -1: -1j * c * (ll - kk)}
    for n in range(0, M + 1):
        delta = jj if n == 0 else ll * asy.S1[n - 1] + (-1) ** n * kk * asy.S0[n - 1]
        G[n] = delta + mm * c * c * asy.Lambda[n + 2]
    scale = max(abs(v) for v in G.values())
    for idx in range(-2, M + 1):
        if scale > 0 and abs(G[idx]) > threshold * scale:
            return GammaData(jj, kk, ll, mm, G, idx)
    raise DegenerateBoundaryError(f"all Γ_m for m <= {M} vanish; boundary data degenerate")


def gamma_data(ld: LiouvilleData, bc, M: int = 2, threshold: float = ZERO_THRESHOLD,
               asy: AsymptoticSeries | None = None) -> GammaData:
    asy = asy if asy is not None else asymptotic_series(ld, max(M + 3, JET_ORDER + 1))
    return gamma_sequence(boundary_coeffs(ld, bc), ld, asy, M, threshold)


def _sqrt_upper(z):
    w = cmath.sqrt(z)
    return -w if w.imag < 0 else w


def asymptotic_log_F(ld: LiouvilleData, gd: GammaData, asy: AsymptoticSeries, N: int, z) -> complex:
    """Truncated large-z expansion of ln F with the branch Im z^{1/2} >= 0."""
    c = ld.c
    w = _sqrt_upper(complex(z))
    lnz = 2 * cmath.log(w)
    out = -1j * c * w - 0.5 * (gd.k0 + 1) * lnz + cmath.log(gd.leading / (2j * c))
    Pi = gd.Pi()
    for m in range(1, N + 1):
        if m > asy.order or m > len(Pi):
            raise PreconditionError(f"Ψ_{m} needs more Riccati or Γ orders")
        psi = asy.intS[m - 1] + Pi[m - 1]
        if m % 2 == 0:
            psi -= asy.D[m // 2 - 1]
        out += psi * w ** (-m)
    return out


# --------------------------------------------------------------------------
# determinant


@dataclass(frozen=True)
class DeterminantResult:
    zeta_prime_0: complex
    determinant: float
    n_neg: int
    m0: int
    k0: int


def zeta_prime_zero(cs: CharSeries, gd: GammaData, c: float, n_neg: int) -> DeterminantResult:
    """ζ'(0) = iπ n_neg - ln(2c |a_{m0}/Γ_{k0}|) and the determinant exp(-ζ'(0))."""
    mag = 2 * c * abs(cs.a[cs.m0] / gd.leading)
    zp = complex(-math.log(mag), math.pi * n_neg)
    return DeterminantResult(zeta_prime_0=zp, determinant=(-1) ** n_neg * mag, n_neg=n_neg,
                             m0=cs.m0, k0=gd.k0)
