"""Pure-numpy implementations of the hot evaluation kernels.

Fallback path used when numba is unavailable or when the environment
selects ``NESTQUAD_BACKEND=numpy``.  Each function mirrors the numba
kernel of the same name; large batches are processed in fixed-size chunks
to bound temporary memory.
"""
from __future__ import annotations

import numpy as np
from scipy.special import erfc

from ._normal_coeffs import (
    A_CENTRAL,
    B_CENTRAL,
    C_MEDIUM,
    D_MEDIUM,
    E_TAIL,
    F_TAIL,
)

NAME = "numpy"

_SQRT2 = np.sqrt(2.0)
_ICDF_EPS = 1e-15  # clamp for quantile arguments inside the Genz recursion

# rows per chunk in the batched kernels; keeps temporaries ~tens of MB
_CHUNK = 256


def norm_cdf(x):
    """Standard normal CDF, Phi(x) = erfc(-x/sqrt(2))/2."""
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * erfc(-x / _SQRT2)


def _icdf_central(q):
    r = 0.180625 - q * q
    num = A_CENTRAL[7]
    for c in A_CENTRAL[6::-1]:
        num = num * r + c
    den = B_CENTRAL[6]
    for c in B_CENTRAL[5::-1]:
        den = den * r + c
    den = den * r + 1.0
    return q * num / den


def _icdf_tail(r, coef_num, coef_den):
    num = coef_num[7]
    for c in coef_num[6::-1]:
        num = num * r + c
    den = coef_den[6]
    for c in coef_den[5::-1]:
        den = den * r + c
    den = den * r + 1.0
    return num / den


def norm_icdf(p):
    """Standard normal quantile via the AS 241 rational approximation."""
    p = np.asarray(p, dtype=np.float64)
    if np.any((p <= 0.0) | (p >= 1.0)):
        raise ValueError("norm_icdf requires p strictly inside (0, 1)")
    q = p - 0.5
    out = np.empty_like(p)

    central = np.abs(q) <= 0.425
    if np.any(central):
        out[central] = _icdf_central(q[central])

    rest = ~central
    if np.any(rest):
        pr = p[rest]
        qr = q[rest]
        rr = np.where(qr < 0.0, pr, 1.0 - pr)
        rr = np.sqrt(-np.log(rr))
        val = np.empty_like(rr)
        med = rr <= 5.0
        if np.any(med):
            val[med] = _icdf_tail(rr[med] - 1.6, C_MEDIUM, D_MEDIUM)
        far = ~med
        if np.any(far):
            val[far] = _icdf_tail(rr[far] - 5.0, E_TAIL, F_TAIL)
        out[rest] = np.where(qr < 0.0, -val, val)
    return out


def synthetic_inner(zs, us, ws, theta):
    """Weighted sums sum_j ws[j] * us[j]**(zs[i] + theta - 1) per outer node."""
    zs = np.ascontiguousarray(zs, dtype=np.float64)
    lus = np.log(us)  # us > 0 except a measure-zero u=0, where exp(p*-inf)=0
    out = np.empty(zs.shape[0])
    p = zs + (theta - 1.0)
    for lo in range(0, zs.shape[0], _CHUNK):
        hi = min(lo + _CHUNK, zs.shape[0])
        with np.errstate(invalid="ignore"):
            mat = np.exp(p[lo:hi, None] * lus[None, :])
        np.nan_to_num(mat, copy=False, nan=0.0)
        out[lo:hi] = np.sum(mat * ws[None, :], axis=1)
    return out


def logit_inner(zmats, alts, umat, ws):
    """Mixed-logit inner sums: sum_j ws[j] * softmax(zmats[i] @ umat[j])[alts[i]]."""
    nz = zmats.shape[0]
    out = np.empty(nz)
    for lo in range(0, nz, _CHUNK):
        hi = min(lo + _CHUNK, nz)
        v = zmats[lo:hi] @ umat.T  # (chunk, J, Nu)
        v -= v.max(axis=1, keepdims=True)
        ev = np.exp(v)
        probs = ev / ev.sum(axis=1, keepdims=True)
        sel = probs[np.arange(hi - lo), alts[lo:hi], :]  # (chunk, Nu)
        out[lo:hi] = np.sum(sel * ws[None, :], axis=1)
    return out


def genz_inner(wvecs, chol, upts, ws):
    """Genz-transformed multivariate-normal CDF sums.

    For each utility-difference row w, averages over the unit-cube points
    the product of the sequentially conditioned one-dimensional CDF factors.
    ``chol`` is the lower Cholesky factor of the differenced covariance.
    """
    nw, m = wvecs.shape
    nu = upts.shape[0]
    out = np.empty(nw)
    for lo in range(0, nw, max(1, _CHUNK // 4)):
        hi = min(lo + max(1, _CHUNK // 4), nw)
        nb = hi - lo
        wh0 = norm_cdf(wvecs[lo:hi, 0] / chol[0, 0])  # (nb,)
        prod = np.broadcast_to(wh0[:, None], (nb, nu)).copy()
        if m > 1:
            xs = np.empty((m - 1, nb, nu))
            wh = np.broadcast_to(wh0[:, None], (nb, nu))
            for i in range(1, m):
                arg = np.clip(upts[None, :, i - 1] * wh, _ICDF_EPS, 1.0 - _ICDF_EPS)
                xs[i - 1] = norm_icdf(arg)
                s = np.zeros((nb, nu))
                for j in range(i):
                    s += chol[i, j] * xs[j]
                wh = norm_cdf((wvecs[lo:hi, i, None] - s) / chol[i, i])
                prod *= wh
        out[lo:hi] = np.sum(prod * ws[None, :], axis=1)
    return out
