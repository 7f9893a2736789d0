"""Independent eigenvalue oracle.

Eigenvalues are the zeros of the reduced characteristic function ``G(t)``.
A mesh uniform in ``u = sqrt(t - floor)`` with several points per Weyl gap
brackets simple roots by sign changes; sampled local minima of ``|G|``
without a sign change are resolved by locating the zero of ``G'`` (double
roots of coupled problems, or closely spaced pairs).  Refinement is a
safeguarded Newton iteration using ``G'`` from the variational equations.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import zeta as hurwitz_zeta

from .errors import NumericalDegeneracyError, RefinementError, UnboundedBelowError
from .ivp import reduced_characteristic, reduced_characteristic_and_derivative
from .problem import Coupled, SLProblem

log = logging.getLogger(__name__)

POINTS_PER_GAP = 8
XTOL = 1e-10
DOUBLE_ROOT_TOL = 1e-8
WEYL_SLACK = 0.2
MAX_FLOOR = 2.0 ** 30
MAX_MESH = 200_000
MAX_ITER = 100


@dataclass(frozen=True)
class Spectrum:
    """Distinct eigenvalues in increasing order with their multiplicities."""

    eigenvalues: np.ndarray
    multiplicities: np.ndarray
    search_floor: float
    count_requested: int
    zero_tol: float = 0.0

    def flat(self):
        """Eigenvalues repeated according to multiplicity."""
        return np.repeat(self.eigenvalues, self.multiplicities)

    @property
    def count(self):
        return int(np.sum(self.multiplicities))

    def nonzero(self):
        flat = self.flat()
        return flat[np.abs(flat) > self.zero_tol]

    def zero_multiplicity(self):
        return int(np.sum(self.multiplicities[np.abs(self.eigenvalues) <= self.zero_tol]))


def _weyl_c(problem: SLProblem, n=2049):
    x = np.linspace(problem.a, problem.b, n)
    f = np.sqrt(np.asarray(problem.r(x), dtype=float) / np.asarray(problem.p(x), dtype=float))
    return float(trapezoid(f, x))


def _sup_q_over_r(problem: SLProblem, n=2049):
    x = np.linspace(problem.a, problem.b, n)
    x = np.concatenate([x, problem.breakpoints()])
    return float(np.max(np.abs(np.asarray(problem.q(x), dtype=float) / np.asarray(problem.r(x), dtype=float))))


class _Evaluator:
    def __init__(self, problem, bc, rtol, atol):
        self.problem, self.bc = problem, bc
        self.kw = dict(rtol=rtol, atol=atol)
        self.calls = 0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if t.size == 0:
            return np.zeros(0), np.zeros(0)
        self.calls += 1
        return reduced_characteristic_and_derivative(self.problem, self.bc, t, **self.kw)

    def value(self, t):
        t = np.asarray(t, dtype=float)
        if t.size == 0:
            return np.zeros(0)
        self.calls += 1
        return reduced_characteristic(self.problem, self.bc, t, **self.kw)


def _tol(t, tscale):
    return XTOL * np.maximum(np.abs(t), tscale)


def _newton_bracketed(ev, lo, hi, glo, ghi, tscale):
    """Safeguarded Newton for sign-change brackets, vectorised over brackets."""
    lo, hi = lo.copy(), hi.copy()
    sign_lo = np.sign(glo)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = lo - glo * (hi - lo) / (ghi - glo)
    x = np.where(np.isfinite(x) & (x > lo) & (x < hi), x, 0.5 * (lo + hi))
    done = np.zeros(len(lo), bool)
    root = np.full(len(lo), np.nan)
    for _ in range(MAX_ITER):
        act = ~done
        if not act.any():
            break
        g, dg = ev(x[act])
        idx = np.nonzero(act)[0]
        exact = g == 0
        left = np.sign(g) == sign_lo[idx]
        lo[idx] = np.where(left & ~exact, x[idx], lo[idx])
        hi[idx] = np.where(~left & ~exact, x[idx], hi[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x[idx] - g / dg
        bad = ~np.isfinite(xn) | (xn <= lo[idx]) | (xn >= hi[idx])
        xn = np.where(bad, 0.5 * (lo[idx] + hi[idx]), xn)
        step = np.abs(xn - x[idx])
        conv = exact | ((step < _tol(xn, tscale)) & ~bad) | (hi[idx] - lo[idx] < _tol(xn, tscale))
        root[idx[conv]] = np.where(exact[conv], x[idx][conv], xn[conv])
        done[idx[conv]] = True
        x[idx] = xn
    if not done.all():
        k = int(np.nonzero(~done)[0][0])
        raise RefinementError("root refinement did not converge", interval=(lo[k], hi[k]))
    return root


def _illinois_derivative(ev, lo, hi, dlo, dhi, tscale):
    """Zero of G' inside brackets where G' changes sign; returns (t*, G(t*))."""
    lo, hi, dlo, dhi = lo.copy(), hi.copy(), dlo.copy(), dhi.copy()
    n = len(lo)
    done = np.zeros(n, bool)
    x = 0.5 * (lo + hi)
    gx = np.full(n, np.nan)
    side = np.zeros(n, int)
    for _ in range(MAX_ITER):
        act = ~done
        if not act.any():
            break
        idx = np.nonzero(act)[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = hi[idx] - dhi[idx] * (hi[idx] - lo[idx]) / (dhi[idx] - dlo[idx])
        bad = ~np.isfinite(xn) | (xn <= lo[idx]) | (xn >= hi[idx])
        xn = np.where(bad, 0.5 * (lo[idx] + hi[idx]), xn)
        g, dg = ev(xn)
        x[idx], gx[idx] = xn, g
        same_lo = np.sign(dg) == np.sign(dlo[idx])
        # Illinois modification: halve the retained endpoint's value when it repeats
        new_side = np.where(same_lo, -1, 1)
        halve = new_side == side[idx]
        keep_hi = same_lo
        dhi[idx] = np.where(keep_hi & halve, 0.5 * dhi[idx], dhi[idx])
        dlo[idx] = np.where(~keep_hi & halve, 0.5 * dlo[idx], dlo[idx])
        lo[idx] = np.where(same_lo, xn, lo[idx])
        dlo[idx] = np.where(same_lo, dg, dlo[idx])
        hi[idx] = np.where(~same_lo, xn, hi[idx])
        dhi[idx] = np.where(~same_lo, dg, dhi[idx])
        side[idx] = new_side
        conv = (hi[idx] - lo[idx] < _tol(xn, tscale)) | (dg == 0)
        done[idx[conv]] = True
    if not done.all():
        k = int(np.nonzero(~done)[0][0])
        raise RefinementError("double-root refinement did not converge", interval=(lo[k], hi[k]))
    return x, gx


def _scan(ev, t, tscale, coupled):
    """All roots in the sampled window ``t`` (ascending), with multiplicities."""
    g = ev.value(t)
    roots, mult = [], []
    s = np.sign(g)
    for i in np.nonzero(s == 0)[0]:
        roots.append(t[i])
        # a vanishing sample between equal signs is a double zero
        dbl = coupled and 0 < i < len(t) - 1 and s[i - 1] == s[i + 1] != 0
        mult.append(2 if dbl else 1)
    change = np.nonzero(s[:-1] * s[1:] < 0)[0]
    if len(change):
        r = _newton_bracketed(ev, t[change], t[change + 1], g[change], g[change + 1], tscale)
        roots.extend(r)
        mult.extend([1] * len(r))
    # sampled local minima of |G| with no sign change on either side
    a = np.abs(g)
    cand = np.nonzero((a[1:-1] < a[:-2]) & (a[1:-1] < a[2:])
                      & (s[:-2] == s[1:-1]) & (s[1:-1] == s[2:]) & (s[1:-1] != 0))[0] + 1
    if len(cand):
        pts = np.unique(np.concatenate([cand - 1, cand, cand + 1]))
        dg = np.zeros(len(t))
        dg[pts] = ev(t[pts])[1]
        # G' changes sign across the minimum; pick the half that brackets it
        lo = np.where(np.sign(dg[cand]) == np.sign(dg[cand - 1]), cand, cand - 1)
        hi = lo + 1
        ok = np.sign(dg[lo]) != np.sign(dg[hi])
        lo, hi, cand = lo[ok], hi[ok], cand[ok]
        if len(cand):
            ts, gs = _illinois_derivative(ev, t[lo], t[hi], dg[lo], dg[hi], tscale)
            local = np.maximum(a[cand - 1], a[cand + 1])
            double = np.abs(gs) < DOUBLE_ROOT_TOL * local
            crossed = (np.sign(gs) != s[cand]) & ~double
            for k in np.nonzero(double)[0]:
                roots.append(ts[k])
                mult.append(2)
            pairs = np.nonzero(crossed)[0]
            if len(pairs):
                lo2 = np.concatenate([t[cand[pairs] - 1], ts[pairs]])
                hi2 = np.concatenate([ts[pairs], t[cand[pairs] + 1]])
                glo2 = np.concatenate([g[cand[pairs] - 1], gs[pairs]])
                ghi2 = np.concatenate([gs[pairs], g[cand[pairs] + 1]])
                r = _newton_bracketed(ev, lo2, hi2, glo2, ghi2, tscale)
                roots.extend(r)
                mult.extend([1] * len(r))
    order = np.argsort(roots)
    roots = np.asarray(roots, dtype=float)[order]
    mult = np.asarray(mult, dtype=int)[order]
    if coupled and len(roots) > 1:
        roots, mult = _merge_close(roots, mult, tscale)
    return roots, mult


def _merge_close(roots, mult, tscale):
    # a double zero whose sampled neighbourhood dips through zero by rounding
    # shows up as two nearly coincident simple roots
    out_r, out_m = [roots[0]], [mult[0]]
    for r, m in zip(roots[1:], mult[1:]):
        if r - out_r[-1] < 1e3 * _tol(r, tscale) and out_m[-1] + m <= 2:
            out_r[-1] = 0.5 * (out_r[-1] + r)
            out_m[-1] += m
        else:
            out_r.append(r)
            out_m.append(m)
    return np.asarray(out_r), np.asarray(out_m, dtype=int)


def _mesh(floor, t_hi, c, t_lo=None):
    """Points uniform in sqrt(t - floor) from t_lo (default floor) to t_hi."""
    du = math.pi / (POINTS_PER_GAP * c)
    u0 = 0.0 if t_lo is None else math.sqrt(max(t_lo - floor, 0.0))
    u1 = math.sqrt(max(t_hi - floor, 0.0))
    n = max(3, int(math.ceil((u1 - u0) / du)) + 1)
    if n > MAX_MESH:
        raise NumericalDegeneracyError(
            f"scanning [{floor + u0 * u0:.4g}, {t_hi:.4g}] needs {n} integrations; "
            "the lowest eigenvalue lies too far below the rest of the spectrum")
    u = np.linspace(u0, u1, n)
    return floor + u * u


def _boundary_scale(problem: SLProblem, bc):
    """Rough size of the negative energy a boundary term can bind.

    A quasi-derivative condition ``y^[1] = -h y`` at an end supports a state
    near ``-h² p / r``; ``h`` is read off the boundary parameters.  Separated
    ends only bind when the solution decays into the interior (cot > 0).
    """
    ends = [(float(problem.p(x)), float(problem.r(x))) for x in (problem.a, problem.b)]
    if isinstance(bc, Coupled):
        (r11, r12), (r21, r22) = bc.R
        if abs(r12) > 1e-12:
            h = (abs(r11) + abs(r22) + 2.0) / abs(r12)
        else:
            h = abs(r11 * r21)
        return sum(h * h / (p * r) for p, r in ends)
    total = 0.0
    for angle, (p, r) in zip((bc.alpha, bc.beta), ends):
        s = math.sin(angle)
        if abs(s) > 1e-12:
            total += max(math.cos(angle) / s, 0.0) ** 2 / (p * r)
    return total


def _find_floor(ev, problem, bc, c, tscale, coupled):
    f = -(1.0 + 2.0 * _sup_q_over_r(problem) + 4.0 * _boundary_scale(problem, bc))
    limit = MAX_FLOOR * abs(f)
    while True:
        if abs(f) > limit:
            raise UnboundedBelowError(f"no root-free window found above {-limit:g}; "
                                      "operator may be unbounded below")
        window = _mesh(2 * f, f, c)
        g = ev.value(window)
        if np.all(np.sign(g[:-1]) * np.sign(g[1:]) > 0):
            return 2 * f
        f *= 2


def _evaluator(problem, bc, rtol, atol):
    return _Evaluator(problem, bc, rtol, atol)


def find_eigenvalues(problem: SLProblem, bc, count: int, *, rtol=1e-12, atol=1e-14,
                     floor: float | None = None) -> Spectrum:
    """The lowest ``count`` eigenvalues (counted with multiplicity)."""
    if count < 1:
        raise ValueError("count must be at least 1")
    c = _weyl_c(problem)
    tscale = 1.0 / c ** 2
    coupled = isinstance(bc, Coupled)
    ev = _evaluator(problem, bc, rtol, atol)
    floor = _find_floor(ev, problem, bc, c, tscale, coupled) if floor is None else floor
    roots, mult = np.zeros(0), np.zeros(0, int)
    t_lo = floor
    u_hi = math.pi * (count + 2) / c
    while True:
        t_hi = floor + u_hi ** 2
        mesh = _mesh(floor, t_hi, c, t_lo)
        r, m = _scan(ev, mesh, tscale, coupled)
        # consecutive windows overlap by two mesh cells; drop repeats
        keep = np.ones(len(r), bool)
        if len(roots) and len(r):
            gap = np.min(np.abs(r[:, None] - roots[None, :]), axis=1)
            keep = gap > 10 * _tol(r, tscale)
        roots = np.concatenate([roots, r[keep]])
        mult = np.concatenate([mult, m[keep]])
        if mult.sum() >= count + (1 if coupled else 0):
            break
        t_lo = mesh[-3]
        u_hi *= 1.5
    total = np.cumsum(mult)
    n = int(np.searchsorted(total, count) + 1)
    log.debug("oracle: %d integrations for %d eigenvalues", ev.calls, count)
    return Spectrum(eigenvalues=roots[:n], multiplicities=mult[:n], search_floor=floor,
                    count_requested=count, zero_tol=1e-8 * math.pi ** 2 / c ** 2)


def count_negative(problem: SLProblem, bc, *, rtol=1e-12, atol=1e-14) -> int:
    """Number of strictly negative eigenvalues, with multiplicity."""
    c = _weyl_c(problem)
    tscale = 1.0 / c ** 2
    coupled = isinstance(bc, Coupled)
    ev = _evaluator(problem, bc, rtol, atol)
    floor = _find_floor(ev, problem, bc, c, tscale, coupled)
    zero_tol = 1e-8 * math.pi ** 2 / c ** 2
    # extend slightly past zero so a zero eigenvalue is bracketed rather than sampled
    top = 0.5 * math.pi ** 2 / c ** 2
    roots, mult = _scan(ev, _mesh(floor, top, c), tscale, coupled)
    return int(np.sum(mult[roots < -zero_tol]))


def zeta_partial(spectrum: Spectrum, n: int, c: float, *, slack: float = WEYL_SLACK,
                 tol: float | None = None):
    """Partial sum of λ^{-n} over the found non-zero eigenvalues, and a Weyl tail estimate.

    The tail bound assumes ``λ_j >= (1 - slack) π² j² / c²`` beyond the last
    found index; it is a heuristic estimate, not a certificate.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    lam = spectrum.nonzero()
    estimate = float(np.sum(lam ** (-float(n))))
    J = spectrum.count
    if 2 * n <= 1:
        raise ValueError("tail sum diverges")
    tail = float(((1 - slack) * math.pi ** 2 / c ** 2) ** (-n) * hurwitz_zeta(2 * n, J + 1))
    if tol is not None and tail > tol:
        warnings.warn(f"tail bound {tail:.3g} exceeds tolerance {tol:.3g}; more eigenvalues needed",
                      RuntimeWarning, stacklevel=2)
    return estimate, tail
