"""Truncated Taylor-series arithmetic.

A jet is a 1-D array ``t`` holding Taylor coefficients ``t[k]`` of
``(x - x0)**k``.  All operations truncate to the shorter operand, so the
length of a result is the number of coefficients that are actually known.
"""

from math import factorial

import numpy as np


def from_derivatives(values):
    """Convert derivative values ``[f, f', f'', ...]`` into Taylor coefficients."""
    values = np.asarray(values)
    return values / np.array([factorial(k) for k in range(len(values))], dtype=float)


def to_derivatives(jet):
    jet = np.asarray(jet)
    return jet * np.array([factorial(k) for k in range(len(jet))], dtype=float)


def constant(value, n):
    out = np.zeros(n, dtype=np.result_type(value, float))
    out[0] = value
    return out


def mul(a, b):
    n = min(len(a), len(b))
    return np.convolve(a[:n], b[:n])[:n]


def reciprocal(a):
    n = len(a)
    if a[0] == 0:
        raise ZeroDivisionError("jet with vanishing constant term has no reciprocal")
    out = np.zeros(n, dtype=np.result_type(a, float))
    out[0] = 1.0 / a[0]
    for k in range(1, n):
        out[k] = -np.dot(a[1:k + 1], out[k - 1::-1][:k]) / a[0]
    return out


def div(a, b):
    n = min(len(a), len(b))
    return mul(a[:n], reciprocal(b[:n]))


def power(a, alpha):
    """``a**alpha`` for a jet with non-zero constant term (principal branch)."""
    n = len(a)
    a = np.asarray(a)
    out = np.zeros(n, dtype=np.result_type(a, float))
    out[0] = a[0] ** alpha
    for k in range(1, n):
        j = np.arange(1, k + 1)
        out[k] = np.sum(((alpha + 1) * j - k) * a[j] * out[k - j]) / (k * a[0])
    return out


def deriv(a):
    """Derivative; the result is one coefficient shorter."""
    a = np.asarray(a)
    return a[1:] * np.arange(1, len(a))


def integ(a):
    """Antiderivative vanishing at the expansion point (same length as ``a``)."""
    a = np.asarray(a)
    out = np.zeros(len(a), dtype=a.dtype if a.dtype.kind == "c" else float)
    out[1:] = a[:-1] / np.arange(1, len(a))
    return out


def compose(f, g):
    """``f(g)`` where ``g`` has a vanishing constant term."""
    n = min(len(f), len(g))
    if g[0] != 0:
        raise ValueError("inner jet must vanish at the expansion point")
    g = np.asarray(g[:n])
    out = constant(f[n - 1], n).astype(np.result_type(f, g, float))
    for k in range(n - 2, -1, -1):
        out = mul(out, g)
        out[0] += f[k]
    return out


def revert(g):
    """Compositional inverse of ``g`` (``g[0] == 0``, ``g[1] != 0``)."""
    n = len(g)
    if g[0] != 0 or g[1] == 0:
        raise ValueError("series reversion needs g(0) = 0 and g'(0) != 0")
    h = np.zeros(n, dtype=np.result_type(g, float))
    h[1] = 1.0 / g[1]
    for k in range(2, n):
        trial = compose(g, h[:k + 1])
        h[k] = -trial[k] / g[1]
    return h


def shift_polynomial(coefficients, x0, n):
    """Taylor jet at ``x0`` of the polynomial with ascending ``coefficients``."""
    coefficients = np.asarray(coefficients, dtype=float)
    out = np.zeros(n)
    deg = len(coefficients) - 1
    cur = coefficients.copy()
    for k in range(min(n, deg + 1)):
        out[k] = np.polynomial.polynomial.polyval(x0, cur) / factorial(k)
        cur = np.polynomial.polynomial.polyder(cur)
    return out
