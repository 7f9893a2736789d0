"""Problems and boundary conditions shared by the test modules."""

import math
from functools import lru_cache

from slzeta import (Coupled, Interval, PiecewiseConstant, Polynomial, SLProblem, Separated, compute_series,
                    resolve_named_bc, schroedinger)

PI = math.pi


def free():
    return schroedinger(0.0, 1.0)


def well(a=0.0, c=0.3, d=0.7, b=1.0, V0=5.0):
    return SLProblem(Interval(a, b), q=PiecewiseConstant((c, d), (0.0, V0, 0.0)))


def variable():
    return SLProblem(Interval(0.0, 1.0), p=Polynomial((1.0, 0.5)), q=Polynomial((0.5, -1.0, 2.0)),
                     r=Polynomial((1.0, 0.5, 0.25)))


VAR_COUPLED = Coupled(0.4, ((2.0, 0.5), (0.6, 0.65)))

# name -> (problem factory, boundary condition or named shortcut)
CORPUS = {
    "free-dirichlet": (free, "dirichlet"),
    "free-neumann": (free, "neumann"),
    "free-periodic": (free, "periodic"),
    "free-antiperiodic": (free, "antiperiodic"),
    "free-krein": (free, "krein-von-neumann"),
    "free-mixed": (free, Separated(PI / 4, PI / 3)),
    "const-potential": (lambda: schroedinger(0.0, PI, 1.0), "dirichlet"),
    "zero-mode": (lambda: schroedinger(0.0, 1.0, -PI ** 2), "dirichlet"),
    "well": (well, "dirichlet"),
    "linear": (lambda: schroedinger(0.0, 1.0, Polynomial((0.0, 1.0))), "dirichlet"),
    "variable-separated": (variable, Separated(0.3, 1.2)),
    "variable-coupled": (variable, VAR_COUPLED),
}


@lru_cache(maxsize=None)
def series(name):
    return compute_series(CORPUS[name][0]())


@lru_cache(maxsize=None)
def case(name):
    """(problem, bc, series) for a corpus entry."""
    factory, bc = CORPUS[name]
    problem = factory()
    s = series(name)
    if isinstance(bc, str):
        bc = resolve_named_bc(bc, problem, s)
    return problem, bc, s
