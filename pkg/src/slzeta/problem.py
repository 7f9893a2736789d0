"""Sturm-Liouville problem definitions, coefficient representations and boundary conditions.

The differential expression is ``(1/r) [-(d/dx) p (d/dx) + q]`` on a finite
interval ``(a, b)``.  Coefficients are small immutable objects that evaluate
vectorised over numpy arrays; boundary conditions are either separated angle
pairs or coupled ``(phi, R)`` data with ``R`` in SL(2, R).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import jets
from .errors import ConfigurationError, MissingDependencyError

log = logging.getLogger(__name__)

DET_TOL = 1e-12
DEFAULT_SAMPLES = 4096


# --------------------------------------------------------------------------
# coefficients


class Coefficient:
    """Base class for coefficient representations.

    Subclasses expose ``breakpoints``, the interior points where the
    coefficient (or a low derivative) jumps.
    """

    #: True when two continuous derivatives are available everywhere
    smooth = True

    def __call__(self, x):
        raise NotImplementedError

    def derivative(self, x, order=1):
        raise NotImplementedError

    def taylor(self, x0, n):
        """First ``n`` Taylor coefficients at ``x0`` (right-sided at jumps)."""
        raise NotImplementedError

    def sample_points(self, a, b):
        """Extra points that a sampling validator must visit."""
        return np.asarray(self.breakpoints, dtype=float)

    def check_domain(self, a, b):
        """Raise ConfigurationError when the coefficient cannot be evaluated on [a, b]."""

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Coefficient):
    value: float
    breakpoints = ()

    def __call__(self, x):
        return np.full(np.shape(x), float(self.value)) if np.ndim(x) else float(self.value)

    def derivative(self, x, order=1):
        if order == 0:
            return self(x)
        return np.zeros(np.shape(x)) if np.ndim(x) else 0.0

    def taylor(self, x0, n):
        return jets.constant(float(self.value), n)

    def to_dict(self):
        return {"kind": "constant", "value": float(self.value)}


@dataclass(frozen=True)
class Polynomial(Coefficient):
    """Polynomial with coefficients in ascending powers of x."""

    coefficients: tuple
    breakpoints = ()

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if not self.coefficients:
            raise ConfigurationError("polynomial needs at least one coefficient")

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coefficients)

    def derivative(self, x, order=1):
        c = np.polynomial.polynomial.polyder(self.coefficients, order) if order else self.coefficients
        return np.polynomial.polynomial.polyval(x, c) + 0.0 * np.asarray(x, dtype=float)

    def taylor(self, x0, n):
        return jets.shift_polynomial(self.coefficients, x0, n)

    def to_dict(self):
        return {"kind": "polynomial", "coefficients": list(self.coefficients)}


@dataclass(frozen=True)
class PiecewiseConstant(Coefficient):
    """Step function; ``values[i]`` holds on the i-th piece, right-continuous at breakpoints."""

    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        bp = tuple(float(v) for v in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        if len(vals) != len(bp) + 1:
            raise ConfigurationError("piecewise constant needs len(values) == len(breakpoints) + 1")
        if any(b1 >= b2 for b1, b2 in zip(bp, bp[1:])):
            raise ConfigurationError("piecewise constant breakpoints must be strictly increasing")

    @property
    def smooth(self):
        return len(set(self.values)) <= 1

    def __call__(self, x):
        idx = np.searchsorted(self.breakpoints, x, side="right")
        out = np.asarray(self.values)[idx]
        return out if np.ndim(x) else float(out)

    def derivative(self, x, order=1):
        if order == 0:
            return self(x)
        return np.zeros(np.shape(x)) if np.ndim(x) else 0.0

    def taylor(self, x0, n):
        return jets.constant(float(self(x0)), n)

    def check_domain(self, a, b):
        if any(not (a < bp < b) for bp in self.breakpoints):
            raise ConfigurationError(
                f"piecewise constant breakpoints {self.breakpoints} must lie strictly inside ({a}, {b})")

    def to_dict(self):
        return {"kind": "piecewise_constant", "breakpoints": list(self.breakpoints),
                "values": list(self.values)}


@dataclass(frozen=True)
class Tabulated(Coefficient):
    """Sampled coefficient, interpolated linearly (order 1) or by a cubic spline (order 3)."""

    nodes: tuple
    values: tuple
    order: int = 3
    _spline: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = tuple(float(v) for v in self.nodes)
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", vals)
        if len(nodes) != len(vals) or len(nodes) < 2:
            raise ConfigurationError("tabulated coefficient needs matching nodes/values (at least 2)")
        if any(n1 >= n2 for n1, n2 in zip(nodes, nodes[1:])):
            raise ConfigurationError("tabulated nodes must be strictly increasing")
        if self.order not in (1, 3):
            raise ConfigurationError("tabulated interpolation order must be 1 or 3")
        if self.order == 3:
            if len(nodes) < 4:
                raise ConfigurationError("cubic interpolation needs at least 4 nodes")
            object.__setattr__(self, "_spline", CubicSpline(nodes, vals, bc_type="not-a-knot"))

    @property
    def smooth(self):
        return self.order == 3

    @property
    def breakpoints(self):
        # kinks of the linear interpolant matter for the integrator
        return self.nodes[1:-1] if self.order == 1 else ()

    def __call__(self, x):
        if self.order == 3:
            out = self._spline(x)
            return out if np.ndim(x) else float(out)
        out = np.interp(x, self.nodes, self.values)
        return out if np.ndim(x) else float(out)

    def derivative(self, x, order=1):
        if order == 0:
            return self(x)
        if self.order == 3:
            out = self._spline(x, order)
            return out if np.ndim(x) else float(out)
        if order == 1:
            slopes = np.diff(self.values) / np.diff(self.nodes)
            idx = np.clip(np.searchsorted(self.nodes, x, side="right") - 1, 0, len(slopes) - 1)
            out = slopes[idx]
            return out if np.ndim(x) else float(out)
        return np.zeros(np.shape(x)) if np.ndim(x) else 0.0

    def taylor(self, x0, n):
        out = np.zeros(n)
        for k in range(min(n, 4)):
            out[k] = self.derivative(x0, k) / math.factorial(k)
        return out

    def sample_points(self, a, b):
        nodes = np.asarray(self.nodes)
        return nodes[(nodes > a) & (nodes < b)]

    def check_domain(self, a, b):
        if self.nodes[0] > a or self.nodes[-1] < b:
            raise ConfigurationError(
                f"tabulated nodes cover [{self.nodes[0]}, {self.nodes[-1]}], which does not contain [{a}, {b}]")

    def to_dict(self):
        return {"kind": "tabulated", "nodes": list(self.nodes), "values": list(self.values),
                "order": self.order}


def as_coefficient(value) -> Coefficient:
    if isinstance(value, Coefficient):
        return value
    if isinstance(value, (int, float)):
        return Constant(float(value))
    raise ConfigurationError(f"cannot interpret {value!r} as a coefficient")


def coefficient_from_dict(spec: dict) -> Coefficient:
    """Build a coefficient from its ``{kind, ...parameters}`` encoding."""
    if not isinstance(spec, dict):
        return as_coefficient(spec)
    kind = spec.get("kind")
    try:
        if kind == "constant":
            return Constant(float(spec["value"]))
        if kind == "polynomial":
            return Polynomial(tuple(spec["coefficients"]))
        if kind == "piecewise_constant":
            return PiecewiseConstant(tuple(spec["breakpoints"]), tuple(spec["values"]))
        if kind == "tabulated":
            return Tabulated(tuple(spec["nodes"]), tuple(spec["values"]), int(spec.get("order", 3)))
    except KeyError as exc:
        raise ConfigurationError(f"coefficient of kind {kind!r} is missing field {exc}") from None
    raise ConfigurationError(f"unknown coefficient kind {kind!r}")


# --------------------------------------------------------------------------
# problem


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ConfigurationError("interval endpoints must be finite")
        if not self.a < self.b:
            raise ConfigurationError(f"interval needs a < b, got ({self.a}, {self.b})")

    @property
    def length(self):
        return self.b - self.a


@dataclass(frozen=True)
class SLProblem:
    interval: Interval
    p: Coefficient = Constant(1.0)
    q: Coefficient = Constant(0.0)
    r: Coefficient = Constant(1.0)
    smoothness_class: str = "basic"

    def __post_init__(self):
        if not isinstance(self.interval, Interval):
            object.__setattr__(self, "interval", Interval(*self.interval))
        for name in ("p", "q", "r"):
            object.__setattr__(self, name, as_coefficient(getattr(self, name)))
        if self.smoothness_class not in ("basic", "liouville"):
            raise ConfigurationError("smoothness_class must be 'basic' or 'liouville'")

    @property
    def a(self):
        return self.interval.a

    @property
    def b(self):
        return self.interval.b

    def breakpoints(self):
        """Sorted interior discontinuities of p, q and r."""
        pts = set()
        for coef in (self.p, self.q, self.r):
            pts.update(float(x) for x in coef.breakpoints if self.a < x < self.b)
        return tuple(sorted(pts))

    def coefficients(self, x):
        return self.p(x), self.q(x), self.r(x)


def schroedinger(a, b, q=0.0, **kwargs) -> SLProblem:
    """Shorthand for ``p = r = 1`` problems."""
    return SLProblem(Interval(a, b), Constant(1.0), as_coefficient(q), Constant(1.0), **kwargs)


# --------------------------------------------------------------------------
# boundary conditions


@dataclass(frozen=True)
class Separated:
    """``g(a) cos(alpha) + g'(a) sin(alpha) = 0`` and ``g(b) cos(beta) - g'(b) sin(beta) = 0``."""

    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            value = float(getattr(self, name))
            reduced = math.fmod(value, math.pi)
            if reduced < 0:
                reduced += math.pi
            if not math.isclose(reduced, value, rel_tol=0, abs_tol=1e-15):
                log.warning("separated angle %s=%r reduced to %r (mod pi)", name, value, reduced)
            object.__setattr__(self, name, reduced)

    @property
    def kind(self):
        return "separated"

    def to_dict(self):
        return {"type": "separated", "alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class Coupled:
    """``(g(b), g'(b)) = e^{i phi} R (g(a), g'(a))`` with ``det R = 1``."""

    phi: float
    R: tuple

    def __post_init__(self):
        value = float(self.phi)
        reduced = math.fmod(value, 2 * math.pi)
        if reduced < 0:
            reduced += 2 * math.pi
        if not math.isclose(reduced, value, rel_tol=0, abs_tol=1e-15):
            log.warning("coupled angle phi=%r reduced to %r (mod 2 pi)", value, reduced)
        object.__setattr__(self, "phi", reduced)
        R = np.asarray(self.R, dtype=float)
        if R.shape != (2, 2):
            raise ConfigurationError("coupled boundary matrix R must be 2x2")
        det = R[0, 0] * R[1, 1] - R[0, 1] * R[1, 0]
        if abs(det - 1.0) > DET_TOL:
            raise ConfigurationError(f"coupled boundary matrix must have det R = 1, got {det!r}")
        object.__setattr__(self, "R", tuple(tuple(float(v) for v in row) for row in R))

    @property
    def kind(self):
        return "coupled"

    @property
    def matrix(self):
        return np.array(self.R)

    def to_dict(self):
        return {"type": "coupled", "phi": self.phi, "R": [list(row) for row in self.R]}


BoundaryCondition = Separated | Coupled

NAMED_BCS = ("dirichlet", "neumann", "periodic", "antiperiodic", "krein-von-neumann")


def resolve_named_bc(name: str, problem: SLProblem | None = None, base=None) -> BoundaryCondition:
    """Translate a named boundary condition into its parameters.

    ``base`` must carry the z = 0 basis values at ``b`` (a ``SeriesAtB`` or any
    object with ``theta_k``, ``phi_k``, ``theta_quasi_k`` and ``phi_quasi_k``)
    for the Krein-von Neumann extension.
    """
    key = name.strip().lower().replace("_", "-")
    if key == "dirichlet":
        return Separated(0.0, 0.0)
    if key == "neumann":
        return Separated(math.pi / 2, math.pi / 2)
    if key == "periodic":
        return Coupled(0.0, ((1.0, 0.0), (0.0, 1.0)))
    if key == "antiperiodic":
        return Coupled(math.pi, ((1.0, 0.0), (0.0, 1.0)))
    if key in ("krein-von-neumann", "krein"):
        if base is None:
            raise MissingDependencyError(
                "the Krein-von Neumann condition needs the z=0 basis values at b")
        theta, phi = float(base.theta_k[0]), float(base.phi_k[0])
        theta_q, phi_q = float(base.theta_quasi_k[0]), float(base.phi_quasi_k[0])
        R = np.array([[theta, phi], [theta_q, phi_q]])
        det = theta * phi_q - phi * theta_q
        # the Wronskian is 1 up to integration error; rescale the second row so det R = 1 exactly
        R[1] /= det
        return Coupled(0.0, R)
    raise ConfigurationError(f"unknown boundary condition {name!r}; expected one of {NAMED_BCS}")


def bc_from_dict(spec, problem=None, base=None) -> BoundaryCondition:
    if isinstance(spec, str):
        return resolve_named_bc(spec, problem, base)
    if isinstance(spec, (Separated, Coupled)):
        return spec
    kind = spec.get("type")
    if kind == "separated":
        return Separated(float(spec["alpha"]), float(spec["beta"]))
    if kind == "coupled":
        return Coupled(float(spec["phi"]), spec["R"])
    if "name" in spec:
        return resolve_named_bc(spec["name"], problem, base)
    raise ConfigurationError(f"cannot interpret boundary condition {spec!r}")


# --------------------------------------------------------------------------
# hypothesis checks


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self):
        return not self.violations

    def __iter__(self):
        return iter(self.violations)


def _sample_grid(problem: SLProblem, n: int):
    a, b = problem.a, problem.b
    extra = [c.sample_points(a, b) for c in (problem.p, problem.q, problem.r)]
    x = np.concatenate([np.linspace(a, b, n), *extra])
    return np.unique(x[(x >= a) & (x <= b)])


def _evaluate(problem: SLProblem, x):
    for name in ("p", "q", "r"):
        getattr(problem, name).check_domain(problem.a, problem.b)
    with np.errstate(all="ignore"):
        return (np.asarray(problem.p(x), dtype=float), np.asarray(problem.q(x), dtype=float),
                np.asarray(problem.r(x), dtype=float))


def validate_basic(problem: SLProblem, samples: int = DEFAULT_SAMPLES) -> ValidationReport:
    """Sampled check of positivity and integrability of the coefficients."""
    x = _sample_grid(problem, samples)
    p, q, r = _evaluate(problem, x)
    out = []
    if not np.all(np.isfinite(r)) or not np.all(r > 0):
        out.append("r > 0 fails")
    if not np.all(np.isfinite(p)) or not np.all(p > 0):
        out.append("p > 0 fails")
    elif not np.all(np.isfinite(1.0 / p)):
        out.append("1/p in L1 fails")
    if not np.all(np.isfinite(q)):
        out.append("q in L1 fails")
    return ValidationReport(tuple(out))


def validate_liouville(problem: SLProblem, samples: int = DEFAULT_SAMPLES,
                       eps: float = 1e-12) -> ValidationReport:
    """Additional sampled checks needed by the Liouville transformation."""
    base = validate_basic(problem, samples)
    out = list(base.violations)
    x = _sample_grid(problem, samples)
    p, q, r = _evaluate(problem, x)
    if base.ok:
        if not np.all(np.isfinite(1.0 / r)):
            out.append("1/r essentially bounded fails")
        if not np.all(p * r >= eps):
            out.append("pr bounded below by a positive constant fails")
    for name in ("p", "r"):
        coef = getattr(problem, name)
        if not coef.smooth:
            if isinstance(coef, PiecewiseConstant):
                out.append("pr not absolutely continuous")
            else:
                out.append(f"{name} lacks the two derivatives needed for the transformed potential")
    return ValidationReport(tuple(dict.fromkeys(out)))
