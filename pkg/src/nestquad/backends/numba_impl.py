"""Numba-accelerated evaluation kernels.

Default backend when numba imports successfully.  Kernels parallelize over
outer nodes only (no parallel reductions), so results are bit-identical
across thread counts and runs.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

from ._normal_coeffs import (
    A_CENTRAL,
    B_CENTRAL,
    C_MEDIUM,
    D_MEDIUM,
    E_TAIL,
    F_TAIL,
)

NAME = "numba"

_ICDF_EPS = 1e-15
_SQRT2 = math.sqrt(2.0)

_KW = {"cache": True, "nogil": True}


@njit(**_KW)
def _cdf_scalar(x):
    return 0.5 * math.erfc(-x / _SQRT2)


@njit(**_KW)
def _icdf_scalar(p):
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = A_CENTRAL[7]
        for k in range(6, -1, -1):
            num = num * r + A_CENTRAL[k]
        den = B_CENTRAL[6]
        for k in range(5, -1, -1):
            den = den * r + B_CENTRAL[k]
        den = den * r + 1.0
        return q * num / den
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        num = C_MEDIUM[7]
        for k in range(6, -1, -1):
            num = num * r + C_MEDIUM[k]
        den = D_MEDIUM[6]
        for k in range(5, -1, -1):
            den = den * r + D_MEDIUM[k]
        den = den * r + 1.0
    else:
        r -= 5.0
        num = E_TAIL[7]
        for k in range(6, -1, -1):
            num = num * r + E_TAIL[k]
        den = F_TAIL[6]
        for k in range(5, -1, -1):
            den = den * r + F_TAIL[k]
        den = den * r + 1.0
    val = num / den
    return -val if q < 0.0 else val


@njit(**_KW)
def norm_cdf(x):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = _cdf_scalar(x[i])
    return out


@njit(**_KW)
def norm_icdf(p):
    out = np.empty(p.shape[0])
    for i in range(p.shape[0]):
        out[i] = _icdf_scalar(p[i])
    return out


@njit(parallel=True, **_KW)
def synthetic_inner(zs, us, ws, theta):
    nz = zs.shape[0]
    nu = us.shape[0]
    lus = np.empty(nu)
    for j in range(nu):
        lus[j] = math.log(us[j]) if us[j] > 0.0 else -np.inf
    out = np.empty(nz)
    for i in prange(nz):
        p = zs[i] + theta - 1.0
        acc = 0.0
        for j in range(nu):
            t = p * lus[j]
            acc += ws[j] * (math.exp(t) if t > -700.0 else 0.0)
        out[i] = acc
    return out


@njit(parallel=True, **_KW)
def logit_inner(zmats, alts, umat, ws):
    nz = zmats.shape[0]
    nalt = zmats.shape[1]
    q = zmats.shape[2]
    nu = umat.shape[0]
    out = np.empty(nz)
    for i in prange(nz):
        acc = 0.0
        v = np.empty(nalt)
        for j in range(nu):
            vmax = -np.inf
            for a in range(nalt):
                s = 0.0
                for r in range(q):
                    s += zmats[i, a, r] * umat[j, r]
                v[a] = s
                if s > vmax:
                    vmax = s
            den = 0.0
            for a in range(nalt):
                v[a] = math.exp(v[a] - vmax)
                den += v[a]
            acc += ws[j] * v[alts[i]] / den
        out[i] = acc
    return out


@njit(parallel=True, **_KW)
def genz_inner(wvecs, chol, upts, ws):
    nw = wvecs.shape[0]
    m = wvecs.shape[1]
    nu = upts.shape[0]
    out = np.empty(nw)
    for iw in prange(nw):
        acc = 0.0
        xs = np.empty(m - 1) if m > 1 else np.empty(1)
        for iu in range(nu):
            wh = _cdf_scalar(wvecs[iw, 0] / chol[0, 0])
            prod = wh
            for i in range(1, m):
                arg = upts[iu, i - 1] * wh
                if arg < _ICDF_EPS:
                    arg = _ICDF_EPS
                elif arg > 1.0 - _ICDF_EPS:
                    arg = 1.0 - _ICDF_EPS
                xs[i - 1] = _icdf_scalar(arg)
                s = 0.0
                for j in range(i):
                    s += chol[i, j] * xs[j]
                wh = _cdf_scalar((wvecs[iw, i] - s) / chol[i, i])
                prod *= wh
            acc += ws[iu] * prod
        out[iw] = acc
    return out
