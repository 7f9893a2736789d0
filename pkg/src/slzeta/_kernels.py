"""Compiled single-step kernel for the quasi-derivative system.

One call performs a full DOP853 step for every lane.  Rows of ``y`` are
θ, θ^[1], φ, φ^[1] and, when ``y`` has eight rows, their derivatives with
respect to the spectral parameter.
"""

import numpy as np
from numba import njit
from scipy.integrate import DOP853

_A = np.ascontiguousarray(DOP853.A)
_B = np.ascontiguousarray(DOP853.B)
_E3 = np.ascontiguousarray(DOP853.E3)
_E5 = np.ascontiguousarray(DOP853.E5)


@njit(cache=True)
def _rhs(y, ip, q, r, z, out):
    rows, n = y.shape
    for j in range(n):
        w = q - z[j] * r
        out[0, j] = y[1, j] * ip
        out[1, j] = w * y[0, j]
        out[2, j] = y[3, j] * ip
        out[3, j] = w * y[2, j]
        if rows == 8:
            out[4, j] = y[5, j] * ip
            out[5, j] = w * y[4, j] - r * y[0, j]
            out[6, j] = y[7, j] * ip
            out[7, j] = w * y[6, j] - r * y[2, j]


@njit(cache=True)
def sl_step(y, h, cv, z, K, amp, rtol, atol, A, B, E3, E5):
    """One step; ``K[0]`` must hold f(x, y).  Returns (y_new, err) and fills K[1:]."""
    rows, n = y.shape
    ns = 12
    tmp = np.empty_like(y)
    for s in range(1, ns):
        for i in range(rows):
            for j in range(n):
                acc = 0.0 * y[i, j]
                for k in range(s):
                    acc += A[s, k] * K[k, i, j]
                tmp[i, j] = y[i, j] + h * acc
        _rhs(tmp, cv[0, s], cv[1, s], cv[2, s], z, K[s])
    y_new = np.empty_like(y)
    for i in range(rows):
        for j in range(n):
            acc = 0.0 * y[i, j]
            for k in range(ns):
                acc += B[k] * K[k, i, j]
            y_new[i, j] = y[i, j] + h * acc
    _rhs(y_new, cv[0, ns], cv[1, ns], cv[2, ns], z, K[ns])
    err = 0.0
    for j in range(n):
        e5 = 0.0
        e3 = 0.0
        for i in range(rows):
            a5 = 0.0 * y[i, j]
            a3 = 0.0 * y[i, j]
            for k in range(ns + 1):
                a5 += E5[k] * K[k, i, j]
                a3 += E3[k] * K[k, i, j]
            sc = atol + rtol * max(amp[i, j], abs(y_new[i, j]))
            v5 = abs(a5) / sc
            v3 = abs(a3) / sc
            if v5 > e5:
                e5 = v5
            if v3 > e3:
                e3 = v3
        if e5 > 0:
            lane = abs(h) * e5 * e5 / np.sqrt(e5 * e5 + 0.01 * e3 * e3)
            if lane > err or lane != lane:
                err = lane
    return y_new, err


@njit(cache=True)
def sl_rhs(y, ip, q, r, z):
    out = np.empty_like(y)
    _rhs(y, ip, q, r, z, out)
    return out
