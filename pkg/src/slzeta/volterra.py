"""Taylor coefficients in z of the basis solutions, by iterated Volterra integrals.

The z = 0 Green's function ``g(0, x, x') = θ0(x) φ0(x') - θ0(x') φ0(x)`` has
rank two, so each level of the recursion costs two running integrals over a
composite Gauss-Lobatto grid instead of a nested multiple integral.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import DOP853

from .errors import PreconditionError
from .problem import SLProblem

log = logging.getLogger(__name__)

GRID_SIZE = 2048
DEFAULT_K = 12
STABILITY_TOL = 1e-8

_S5 = 1.0 / math.sqrt(5.0)
_T = np.array([-1.0, -_S5, _S5, 1.0])
_W = np.array([1.0, 5.0, 5.0, 1.0]) / 6.0


def _cumulative_matrix():
    # row i: weights giving ∫_{-1}^{t_i} of the cubic interpolant through the four nodes
    V = np.vander(_T, 4, increasing=True)
    inv = np.linalg.inv(V)  # monomial coefficients of each Lagrange basis polynomial (columns)
    powers = np.arange(1, 5)
    prim = (_T[:, None] ** powers[None, :] - (-1.0) ** powers[None, :]) / powers[None, :]
    return prim @ inv


_CUM = _cumulative_matrix()


@dataclass(frozen=True)
class PanelGrid:
    """Composite four-point Gauss-Lobatto grid; ``x`` and ``w`` have shape (panels, 4)."""

    x: np.ndarray
    w: np.ndarray
    half: np.ndarray

    @property
    def size(self):
        return self.x.shape[0]

    @property
    def nodes(self):
        return np.unique(self.x)

    def inner(self):
        """Nodes nudged into their own panel so one-sided coefficient values are used at jumps."""
        lo = np.nextafter(self.x[:, :1], self.x[:, -1:])
        hi = np.nextafter(self.x[:, -1:], self.x[:, :1])
        return np.clip(self.x, lo, hi)

    def integrate(self, values):
        return float(np.sum(self.w * values)) if np.isrealobj(values) else complex(np.sum(self.w * values))

    def cumulative(self, values):
        """Running integral from ``a`` evaluated at every node."""
        local = (values @ _CUM.T) * self.half[:, None]
        offsets = np.concatenate([[0.0], np.cumsum(local[:-1, -1])])
        return local + offsets[:, None]


def make_grid(problem: SLProblem, panels: int = GRID_SIZE) -> PanelGrid:
    """Panels distributed over the smooth segments, with breakpoints as panel edges."""
    edges = [problem.a, *problem.breakpoints(), problem.b]
    lengths = np.diff(edges)
    counts = np.maximum(1, np.round(panels * lengths / lengths.sum()).astype(int))
    ends = [np.linspace(lo, hi, n + 1) for lo, hi, n in zip(edges[:-1], edges[1:], counts)]
    left = np.concatenate([e[:-1] for e in ends])
    right = np.concatenate([e[1:] for e in ends])
    right[-1] = problem.b
    half = 0.5 * (right - left)
    mid = 0.5 * (right + left)
    x = mid[:, None] + half[:, None] * _T[None, :]
    x[:, 0], x[:, -1] = left, right
    return PanelGrid(x=x, w=half[:, None] * _W[None, :], half=half)


@dataclass(frozen=True)
class GridFunction:
    grid: PanelGrid
    values: np.ndarray

    @property
    def nodes(self):
        return self.grid.x

    @property
    def weights(self):
        return self.grid.w

    def integral(self):
        return self.grid.integrate(self.values)

    def at_b(self):
        return self.values[-1, -1]


@dataclass(frozen=True)
class BaseSolutions:
    """The z = 0 basis on the grid, together with the weight r sampled there."""

    grid: PanelGrid
    theta: GridFunction
    theta_quasi: GridFunction
    phi: GridFunction
    phi_quasi: GridFunction
    r: np.ndarray

    @property
    def wronskian(self):
        return self.theta.values * self.phi_quasi.values - self.theta_quasi.values * self.phi.values


def _transfer_matrices(problem: SLProblem, left, right, rtol):
    """One DOP853 step of the z = 0 system per interval, as 2x2 transfer matrices.

    The system is linear, so each stage is a matrix acting on the initial state;
    all intervals are handled in one vectorised sweep.  Returns the matrices
    and a per-interval error ratio (< 1 means the step meets ``rtol``).
    """
    A, B, C, E5, E3 = DOP853.A, DOP853.B, DOP853.C, DOP853.E5, DOP853.E3
    ns = DOP853.n_stages
    h = right - left
    lo = np.nextafter(left, right)
    hi = np.nextafter(right, left)
    xs = np.clip(left[:, None] + np.append(C, 1.0)[None, :] * h[:, None], lo[:, None], hi[:, None])
    inv_p = 1.0 / np.asarray(problem.p(xs), dtype=float)
    q = np.asarray(problem.q(xs), dtype=float)
    n = len(h)
    G = np.zeros((ns + 1, n, 2, 2))
    eye = np.broadcast_to(np.eye(2), (n, 2, 2))
    for s in range(ns + 1):
        if s < ns:
            Y = eye + h[:, None, None] * np.tensordot(A[s, :s], G[:s], axes=(0, 0)) if s else eye
        else:
            Y = M
        # A(x) = [[0, 1/p], [q, 0]] applied to Y
        G[s, :, 0, :] = inv_p[:, s, None] * Y[:, 1, :]
        G[s, :, 1, :] = q[:, s, None] * Y[:, 0, :]
        if s == ns - 1:
            M = eye + h[:, None, None] * np.tensordot(B, G[:ns], axes=(0, 0))
    err5 = np.abs(h[:, None, None] * np.tensordot(E5, G, axes=(0, 0)))
    err3 = np.abs(h[:, None, None] * np.tensordot(E3, G, axes=(0, 0)))
    scale = rtol * np.maximum(1.0, np.abs(M).max(axis=(1, 2)))
    e5 = err5.max(axis=(1, 2)) / scale
    e3 = err3.max(axis=(1, 2)) / scale
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(e5 > 0, e5 ** 2 / np.sqrt(e5 ** 2 + 0.01 * e3 ** 2), 0.0)
    return M, ratio


def base_solutions(problem: SLProblem, grid_size: int = GRID_SIZE, *, rtol: float = 1e-13,
                   grid: PanelGrid | None = None) -> BaseSolutions:
    """Sample θ0, θ0^[1], φ0, φ0^[1] (the z = 0 basis) at every grid node."""
    grid = grid if grid is not None else make_grid(problem, grid_size)
    x = grid.x
    left = x[:, :-1].ravel()
    right = x[:, 1:].ravel()
    sub = 1
    while True:
        frac = np.arange(sub + 1) / sub
        pts = left[:, None] + (right - left)[:, None] * frac[None, :]
        M, ratio = _transfer_matrices(problem, pts[:, :-1].ravel(), pts[:, 1:].ravel(), rtol)
        if np.all(ratio < 1.0) or sub >= 64:
            if not np.all(ratio < 1.0):
                log.warning("base solutions: step error ratio %.3g at the finest substep level",
                            float(np.max(ratio)))
            break
        sub *= 2
    # fold substeps into one transfer matrix per interval
    M = M.reshape(len(left), sub, 2, 2)
    T = M[:, 0]
    for k in range(1, sub):
        T = M[:, k] @ T
    fund = np.empty((x.shape[0], 4, 2, 2))
    cur = np.eye(2)
    T = T.reshape(x.shape[0], 3, 2, 2)
    for i in range(x.shape[0]):
        fund[i, 0] = cur
        for j in range(3):
            cur = T[i, j] @ cur
            fund[i, j + 1] = cur
    r = np.asarray(problem.r(grid.inner()), dtype=float)
    return BaseSolutions(
        grid=grid,
        theta=GridFunction(grid, fund[..., 0, 0]),
        theta_quasi=GridFunction(grid, fund[..., 1, 0]),
        phi=GridFunction(grid, fund[..., 0, 1]),
        phi_quasi=GridFunction(grid, fund[..., 1, 1]),
        r=r,
    )


@dataclass(frozen=True)
class SeriesAtB:
    """Taylor coefficients at ``x = b`` of the basis solutions, index k = 0..K."""

    K: int
    phi_k: np.ndarray
    theta_k: np.ndarray
    phi_quasi_k: np.ndarray
    theta_quasi_k: np.ndarray
    base_grid: BaseSolutions | None = None
    warnings: tuple = ()
    grid_size: int = 0
    # full-grid φ_k for diagnostic checks (shape (K+1, panels, 4))
    phi_levels: np.ndarray | None = field(default=None, repr=False)

    def evaluate(self, z):
        """Truncated series values (θ, θ^[1], φ, φ^[1]) at ``z``."""
        powers = np.asarray(z) ** np.arange(self.K + 1)
        return (powers @ self.theta_k, powers @ self.theta_quasi_k,
                powers @ self.phi_k, powers @ self.phi_quasi_k)


def iterate_series(problem: SLProblem, base: BaseSolutions, K: int = DEFAULT_K) -> SeriesAtB:
    """Run the rank-two Volterra recursion for θ_k and φ_k up to order K."""
    if K < 1:
        raise PreconditionError("truncation order K must be at least 1")
    grid = base.grid
    th0, th1 = base.theta.values, base.theta_quasi.values
    ph0, ph1 = base.phi.values, base.phi_quasi.values
    rph, rth = base.r * ph0, base.r * th0

    def step(level):
        i1 = grid.cumulative(rph * level)
        i2 = grid.cumulative(rth * level)
        return th0 * i1 - ph0 * i2, th1 * i1 - ph1 * i2

    rows = {"phi": [ph0], "phi_q": [ph1], "theta": [th0], "theta_q": [th1]}
    for _ in range(K):
        v, d = step(rows["phi"][-1])
        rows["phi"].append(v)
        rows["phi_q"].append(d)
        v, d = step(rows["theta"][-1])
        rows["theta"].append(v)
        rows["theta_q"].append(d)

    at_b = {k: np.array([lvl[-1, -1] for lvl in v]) for k, v in rows.items()}
    warnings = []
    eps = np.finfo(float).eps
    scale = max(np.max(np.abs(at_b[k][0])) for k in at_b)
    for k in range(K + 1):
        mag = max(abs(at_b[name][k]) for name in at_b)
        if mag < 1e3 * eps * scale and k > 0:
            # later terms lie below the floor set by rounding in the z=0 data
            warnings.append(f"coefficient level {k} is below 1e3*eps*scale; truncation K={K} exceeds "
                            "the precision available")
            break
    return SeriesAtB(
        K=K,
        phi_k=at_b["phi"],
        theta_k=at_b["theta"],
        phi_quasi_k=at_b["phi_q"],
        theta_quasi_k=at_b["theta_q"],
        base_grid=base,
        warnings=tuple(warnings),
        grid_size=grid.size,
        phi_levels=np.array(rows["phi"]),
    )


def _stable(s1: SeriesAtB, s2: SeriesAtB, tol):
    worst = 0.0
    for name in ("phi_k", "theta_k", "phi_quasi_k", "theta_quasi_k"):
        a, b = getattr(s1, name), getattr(s2, name)
        level = np.maximum(np.abs(np.vstack([getattr(s2, n) for n in
                                             ("phi_k", "theta_k", "phi_quasi_k", "theta_quasi_k")])).max(axis=0),
                           np.finfo(float).tiny)
        worst = max(worst, float(np.max(np.abs(a - b) / level)))
    return worst <= tol, worst


def compute_series(problem: SLProblem, K: int = DEFAULT_K, grid_size: int = GRID_SIZE, *,
                   refine: bool = True, max_grid: int = 16384, tol: float = STABILITY_TOL) -> SeriesAtB:
    """Base solutions plus recursion, doubling the grid until the coefficients settle.

    Stability is judged per order k relative to the largest of the four
    coefficients at that order.
    """
    series = iterate_series(problem, base_solutions(problem, grid_size), K)
    if not refine:
        return series
    n = grid_size
    while n < max_grid:
        n *= 2
        finer = iterate_series(problem, base_solutions(problem, n), K)
        ok, worst = _stable(series, finer, tol)
        series = finer
        if ok:
            return series
    log.warning("series coefficients did not settle to %.1e by grid size %d (last change %.2e)",
                tol, n, worst)
    return SeriesAtB(**{**series.__dict__, "warnings": series.warnings + (
        f"grid refinement stopped at {n} panels without reaching {tol:g} stability",)})
