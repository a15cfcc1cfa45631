"""One-dimensional quadrature rules.

Provides the constituent 1-D rules the tensor-product quadratures are
built from: Gaussian rules for the four weighted domains, nested
Clenshaw-Curtis rules, generalized Gaussian rules that are exact for
polynomials in a boundary-adapted transform psi(x), and the standard
normal CDF/quantile pair used by the Genz recursion.

All constructors are pure and cache internally; returned rules are
immutable and safe to share across threads.
"""
from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy.linalg import eigh_tridiagonal

from . import backends


class WeightedInterval(enum.Enum):
    """Integration domain together with its fixed weight function."""

    UNIT_INTERVAL = "unit_interval"          # [0,1], weight 1
    SYMMETRIC_INTERVAL = "symmetric_interval"  # [-1,1], weight 1
    HALF_LINE = "half_line"                  # [0,inf), weight e^{-x}
    REAL_LINE = "real_line"                  # R, weight e^{-x^2}

    @property
    def mass(self) -> float:
        """Total mass of the weight function."""
        return {
            WeightedInterval.UNIT_INTERVAL: 1.0,
            WeightedInterval.SYMMETRIC_INTERVAL: 2.0,
            WeightedInterval.HALF_LINE: 1.0,
            WeightedInterval.REAL_LINE: math.sqrt(math.pi),
        }[self]


class Psi(enum.Enum):
    """Boundary-adapted transforms for the generalized Gaussian rules."""

    NEG_LOG1M = "neg_log1m"          # psi(x) = -log(1-x)
    ARCSINH_ATANH = "arcsinh_atanh"  # psi(x) = arcsinh(2*arctanh(x)/pi)
    INV_ERF = "inv_erf"              # psi(x) = erfinv(x)


@dataclass(frozen=True)
class Rule1D:
    """A 1-D quadrature rule: ascending nodes with weights.

    ``order`` is the degree of exactness: the rule integrates (psi-)
    monomials up to that degree against the domain weight exactly.
    For generalized Gaussian rules ``psi_nodes`` holds the nodes in the
    transform space y = psi(x); the x-representation saturates in float64
    once 1 - x underflows, so psi-space is the faithful one there.
    """

    domain: WeightedInterval
    nodes: np.ndarray
    weights: np.ndarray
    order: int
    nested: bool
    psi_nodes: np.ndarray | None = None

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)
        if self.psi_nodes is not None:
            self.psi_nodes.setflags(write=False)

    @property
    def n(self) -> int:
        return self.nodes.shape[0]

    def apply(self, f) -> float:
        """Integrate a callable against the rule."""
        return float(np.sum(self.weights * f(self.nodes)))


class OrthogonalizationError(RuntimeError):
    """Raised when the Stieltjes procedure fails to produce a valid rule."""


_gauss_cache: dict[tuple[WeightedInterval, int], Rule1D] = {}
_cc_cache: dict[int, Rule1D] = {}
_gengauss_cache: dict[tuple[Psi, int], Rule1D] = {}
_recurrence_cache: dict[Psi, tuple[np.ndarray, np.ndarray]] = {}
_lock = threading.Lock()

_GENGAUSS_NMAX = 100  # Stieltjes table length; rules beyond this are refused


_GAUSS_NMAX = 8193  # tridiagonal eigenvalue cost cap; rules beyond are refused


def _orthonormal_scan(diag: np.ndarray, offdiag: np.ndarray, mass: float,
                      x: np.ndarray):
    """Evaluate the orthonormal polynomial sequence of a Jacobi matrix.

    Returns (p_n, p_n', sum_{k<n} p_k^2) at the points x, guarding
    against overflow in the far tail (non-finite entries pass through).
    """
    n = diag.shape[0]
    p_prev = np.zeros_like(x)
    dp_prev = np.zeros_like(x)
    p = np.full_like(x, 1.0 / math.sqrt(mass))
    dp = np.zeros_like(x)
    s2 = p * p
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n):
            sq_next = offdiag[k] if k < n - 1 else 1.0  # scale-free last step
            sq_prev = offdiag[k - 1] if k > 0 else 0.0
            p_next = ((x - diag[k]) * p - sq_prev * p_prev) / sq_next
            dp_next = ((x - diag[k]) * dp + p - sq_prev * dp_prev) / sq_next
            p_prev, p = p, p_next
            dp_prev, dp = dp, dp_next
            if k < n - 1:
                s2 = s2 + p * p
    return p, dp, s2


def _golub_welsch(diag: np.ndarray, offdiag: np.ndarray,
                  mass: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss nodes and weights for a Jacobi matrix with given total mass.

    Eigenvalues of the symmetric tridiagonal matrix, polished by two
    Newton steps on the orthonormal polynomial, with weights from the
    Christoffel function 1 / sum_k p_k(x)^2.  Weights whose magnitude
    falls below the double range underflow to zero.
    """
    n = diag.shape[0]
    if n == 1:
        return diag.copy(), np.array([mass])
    x = eigh_tridiagonal(diag, offdiag, eigvals_only=True)
    for _ in range(2):
        p, dp, _ = _orthonormal_scan(diag, offdiag, mass, x)
        with np.errstate(invalid="ignore", over="ignore"):
            step = p / dp
        ok = np.isfinite(step)
        x = np.where(ok, x - step, x)
    _, _, s2 = _orthonormal_scan(diag, offdiag, mass, x)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        w = 1.0 / s2
    w[~np.isfinite(w)] = 0.0
    order = np.argsort(x)
    return x[order], w[order]


def gauss_rule(domain: WeightedInterval, n: int) -> Rule1D:
    """Gaussian rule with n nodes for the domain's weight function.

    Legendre on the intervals, Laguerre on the half line, Hermite on the
    real line; degree of exactness 2n-1.  Golub-Welsch on the closed-form
    recurrence coefficients.
    """
    if n < 1:
        raise ValueError(f"gauss_rule needs n >= 1, got {n}")
    if n > _GAUSS_NMAX:
        raise ValueError(f"gauss_rule supports n <= {_GAUSS_NMAX}, got {n}")
    key = (domain, n)
    with _lock:
        if key in _gauss_cache:
            return _gauss_cache[key]
    k = np.arange(1, n, dtype=float)
    if domain is WeightedInterval.REAL_LINE:
        x, w = _golub_welsch(np.zeros(n), np.sqrt(k / 2.0), math.sqrt(math.pi))
        # symmetrize: forces the center node of odd rules to exactly 0
        w = 0.5 * (w + w[::-1])
        x = 0.5 * (x - x[::-1])
    elif domain is WeightedInterval.HALF_LINE:
        x, w = _golub_welsch(2.0 * np.arange(n, dtype=float) + 1.0, k, 1.0)
    else:
        b = k * k / (4.0 * k * k - 1.0)
        x, w = _golub_welsch(np.zeros(n), np.sqrt(b), 2.0)
        w = 0.5 * (w + w[::-1])
        x = 0.5 * (x - x[::-1])
        if domain is WeightedInterval.UNIT_INTERVAL:
            x = 0.5 * (x + 1.0)
            w = 0.5 * w
    rule = Rule1D(domain, np.asarray(x, float), np.asarray(w, float),
                  order=2 * n - 1, nested=False)
    with _lock:
        rule = _gauss_cache.setdefault(key, rule)
    return rule


def clenshaw_curtis(level: int) -> Rule1D:
    """Nested Clenshaw-Curtis rule on [-1,1] with 2^level + 1 nodes.

    Level 0 is the one-point midpoint rule.  Weights integrate the
    cosine-series interpolant exactly (computed by a DCT-I); the node
    sets are nested across levels.
    """
    if level < 0:
        raise ValueError(f"clenshaw_curtis needs level >= 0, got {level}")
    with _lock:
        if level in _cc_cache:
            return _cc_cache[level]
    if level == 0:
        nodes = np.array([0.0])
        weights = np.array([2.0])
        order = 1
    else:
        n = 2 ** level  # n+1 nodes
        j = np.arange(n + 1)
        nodes = np.cos(np.pi * j / n)[::-1].copy()  # ascending
        nodes[n // 2] = 0.0
        m = np.zeros(n + 1)
        k = np.arange(0, n + 1, 2)
        m[k] = (2.0 / n) * 2.0 / (1.0 - k.astype(float) ** 2)
        m[0] = 2.0 / n
        m[n] = (1.0 / n) * 2.0 / (1.0 - float(n) ** 2)
        # S_j = sum_k m_k cos(k j pi / n) via DCT-I with halved interior
        mstar = m.copy()
        mstar[1:-1] *= 0.5
        w = scipy.fft.dct(mstar, type=1)
        w[0] *= 0.5
        w[n] *= 0.5
        weights = w[::-1].copy()
        order = n + 1  # even node count per half: symmetric rule gains one
    rule = Rule1D(WeightedInterval.SYMMETRIC_INTERVAL, nodes, weights,
                  order=order, nested=True)
    with _lock:
        rule = _cc_cache.setdefault(level, rule)
    return rule


def _erfinv(x: np.ndarray) -> np.ndarray:
    # erfinv(x) = ndtri((x+1)/2) / sqrt(2)
    return backends.norm_icdf((np.asarray(x, float) + 1.0) / 2.0) / math.sqrt(2.0)


def psi_transform(psi: Psi, x) -> np.ndarray:
    """Evaluate the transform psi at points of [0,1)."""
    x = np.asarray(x, dtype=float)
    if psi is Psi.NEG_LOG1M:
        return -np.log1p(-x)
    if psi is Psi.ARCSINH_ATANH:
        return np.arcsinh(2.0 * np.arctanh(x) / np.pi)
    return _erfinv(x)


def _psi_inverse(psi: Psi, y: np.ndarray) -> np.ndarray:
    if psi is Psi.NEG_LOG1M:
        return -np.expm1(-y)
    if psi is Psi.ARCSINH_ATANH:
        return np.tanh(0.5 * np.pi * np.sinh(y))
    return np.array([math.erf(v) for v in np.atleast_1d(y)])


def _psi_density(psi: Psi, y: np.ndarray) -> np.ndarray:
    """Density of the pushforward of Lebesgue[0,1] under psi, in y-space."""
    y = np.asarray(y, dtype=np.longdouble)
    if psi is Psi.NEG_LOG1M:
        return np.exp(-y)
    if psi is Psi.ARCSINH_ATANH:
        # d/dy tanh((pi/2) sinh y), computed via exp(-s) to avoid overflow
        s = 0.5 * np.pi * np.sinh(y)
        e = np.exp(-2.0 * s)
        sech2 = 4.0 * e / (1.0 + e) ** 2
        return 0.5 * np.pi * np.cosh(y) * sech2
    return (2.0 / np.longdouble(math.sqrt(math.pi))) * np.exp(-(y * y))


_PSI_SUPPORT = {
    Psi.NEG_LOG1M: 40.0,
    Psi.ARCSINH_ATANH: 6.4,
    Psi.INV_ERF: 16.0,
}


def _discretized_measure(psi: Psi) -> tuple[np.ndarray, np.ndarray]:
    """High-resolution discretization (points, weights) of the y-measure."""
    ymax = _PSI_SUPPORT[psi]
    edges = np.concatenate([[0.0], np.geomspace(1e-3, ymax, 96)])
    panel = gauss_rule(WeightedInterval.SYMMETRIC_INTERVAL, 48)
    xg = np.asarray(panel.nodes, dtype=np.longdouble)
    wg = np.asarray(panel.weights, dtype=np.longdouble)
    pts = []
    wts = []
    for a, b in zip(edges[:-1], edges[1:]):
        a = np.longdouble(a)
        b = np.longdouble(b)
        y = 0.5 * (b - a) * xg + 0.5 * (a + b)
        pts.append(y)
        wts.append(0.5 * (b - a) * wg * _psi_density(psi, y))
    return np.concatenate(pts), np.concatenate(wts)


def _stieltjes_recurrence(psi: Psi, nmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Recurrence coefficients (a_k, sqrt(b_k)) of the psi-measure.

    Orthonormal three-term recurrence run on a composite-Gauss
    discretization with extended-precision accumulation.
    """
    yd, wd = _discretized_measure(psi)
    alphas = np.empty(nmax, dtype=np.longdouble)
    sqrt_betas = np.empty(nmax, dtype=np.longdouble)  # sqrt_betas[0] = sqrt(mass)
    total = np.sum(wd)
    if not np.isfinite(total) or total <= 0:
        raise OrthogonalizationError(f"discretized mass invalid for {psi}")
    sqrt_betas[0] = np.sqrt(total)
    q_prev = np.zeros_like(yd)
    q = np.full_like(yd, 1.0 / sqrt_betas[0])
    for k in range(nmax):
        a = np.sum(wd * yd * q * q)
        alphas[k] = a
        if k + 1 == nmax:
            break
        r = (yd - a) * q - (sqrt_betas[k] * q_prev if k > 0 else 0.0)
        nrm2 = np.sum(wd * r * r)
        if not np.isfinite(nrm2) or nrm2 <= 0:
            raise OrthogonalizationError(
                f"Stieltjes breakdown for {psi} at n={k + 1}")
        sqrt_betas[k + 1] = np.sqrt(nrm2)
        q_prev, q = q, r / sqrt_betas[k + 1]
    return alphas, sqrt_betas


def generalized_gauss(psi: Psi, n: int) -> Rule1D:
    """Gaussian-type rule on [0,1] exact for span{psi(x)^k : k <= 2n-1}.

    Built by Golub-Welsch on the recurrence coefficients of the measure
    transported to y = psi(x); for psi = -log(1-x) these coefficients are
    the closed-form Laguerre ones.
    """
    if n < 1:
        raise ValueError(f"generalized_gauss needs n >= 1, got {n}")
    if n > _GENGAUSS_NMAX:
        raise ValueError(
            f"generalized_gauss supports n <= {_GENGAUSS_NMAX}, got {n}")
    key = (psi, n)
    with _lock:
        if key in _gengauss_cache:
            return _gengauss_cache[key]
    if psi is Psi.NEG_LOG1M:
        # transported measure is exactly the Laguerre weight e^{-y}
        lag = gauss_rule(WeightedInterval.HALF_LINE, n)
        ynodes = lag.nodes.copy()
        weights = lag.weights.copy()
    else:
        with _lock:
            rec = _recurrence_cache.get(psi)
        if rec is None:
            rec = _stieltjes_recurrence(psi, _GENGAUSS_NMAX)
            with _lock:
                rec = _recurrence_cache.setdefault(psi, rec)
        alphas, sqrt_betas = rec
        diag = np.asarray(alphas[:n], dtype=float)
        off = np.asarray(sqrt_betas[1:n], dtype=float)
        try:
            evals, evecs = eigh_tridiagonal(diag, off)
        except np.linalg.LinAlgError as exc:  # pragma: no cover
            raise OrthogonalizationError(
                f"Golub-Welsch failed for {psi} at n={n}") from exc
        mass = float(np.asarray(sqrt_betas[0], dtype=float)) ** 2
        ynodes = np.asarray(evals, dtype=float)
        weights = mass * evecs[0, :] ** 2
    nodes = np.asarray(_psi_inverse(psi, ynodes), dtype=float)
    order = np.argsort(ynodes)  # y-order; x may tie at 1.0 in the far tail
    rule = Rule1D(WeightedInterval.UNIT_INTERVAL, nodes[order],
                  np.asarray(weights, float)[order], order=2 * n - 1,
                  nested=False, psi_nodes=ynodes[order])
    with _lock:
        rule = _gengauss_cache.setdefault(key, rule)
    return rule


def normal_cdf(x):
    """Standard normal CDF; scalar in, scalar out (arrays pass through)."""
    arr = np.asarray(x, dtype=float)
    out = backends.norm_cdf(arr.ravel()).reshape(arr.shape)
    return float(out) if np.isscalar(x) or arr.shape == () else out


def normal_icdf(p):
    """Standard normal quantile; requires p strictly inside (0,1)."""
    arr = np.asarray(p, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValueError("normal_icdf requires p in the open interval (0,1)")
    out = backends.norm_icdf(arr.ravel()).reshape(arr.shape)
    return float(out) if np.isscalar(p) or arr.shape == () else out
