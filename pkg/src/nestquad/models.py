"""Benchmark nested integrands: synthetic, Mixed Logit, Multinomial
Probit (GMM moment) and Mixed Probit.

Each factory returns a :class:`~nestquad.stp.NestedIntegrand` whose batch
evaluators dispatch to the active kernel backend.  Simulated choices are
attached per outer node by hashing the node coordinates, so every
integrand stays a pure, reproducible function of (z, u, theta).
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import backends
from .cubature import Domain
from .stp import NestedIntegrand

_LOG_CLAMP = 1e-12  # safety floor before log-type linking functions


# ---------------------------------------------------------------------------
# covariance helpers


@dataclass(frozen=True)
class EquiCorrMatrix:
    """Equicorrelated covariance: unit diagonal, constant off-diagonal rho."""

    dim: int
    rho: float
    sigma: np.ndarray = field(init=False)
    chol_upper: np.ndarray = field(init=False)  # sigma = C^T C

    def __post_init__(self):
        j, rho = self.dim, self.rho
        if not (-1.0 / (j - 1) < rho < 1.0):
            raise ValueError(f"rho={rho} outside (-1/(J-1), 1) for J={j}")
        sigma = np.full((j, j), rho) + (1.0 - rho) * np.eye(j)
        lower = np.linalg.cholesky(sigma)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "chol_upper", lower.T.copy())
        self.sigma.setflags(write=False)
        self.chol_upper.setflags(write=False)

    @property
    def chol_lower(self) -> np.ndarray:
        return self.chol_upper.T


def differenced_covariance(sigma: np.ndarray, k: int) -> np.ndarray:
    """Covariance of (u_j - u_k)_{j != k} for u ~ N(0, sigma)."""
    j = sigma.shape[0]
    keep = [a for a in range(j) if a != k]
    sub = sigma[np.ix_(keep, keep)]
    cross = sigma[keep, k]
    return sub - cross[:, None] - cross[None, :] + sigma[k, k]


# ---------------------------------------------------------------------------
# per-node simulated data


def _node_rng(z: np.ndarray, salt: int) -> np.random.Generator:
    """Deterministic per-node RNG keyed by the node coordinates."""
    digest = hashlib.blake2b(
        np.ascontiguousarray(z, dtype=np.float64).tobytes(),
        digest_size=16, key=int(salt).to_bytes(8, "little")).digest()
    return np.random.Generator(
        np.random.Philox(key=int.from_bytes(digest, "little")))


# ---------------------------------------------------------------------------
# tangens wrapper: unbounded inner domains for cube-based (QMC) rules


def tangens_wrapped(integrand: NestedIntegrand) -> NestedIntegrand:
    """Rewrite an unbounded inner integral as a unit-cube integral.

    Coordinatewise u = tan(pi (x - 1/2)) for Gaussian inner domains and
    u = tan(pi x / 2) for the exponential half-line; the Jacobian and the
    coordinate density fold into the inner weights.  The fast decay of
    the measure flattens the transformed integrand at the boundary, so
    cube-based QMC rules keep their full rate.
    """
    dom = integrand.inner_domain
    if dom is Domain.UNIT_CUBE:
        return integrand
    d2 = integrand.inner_dim

    if dom is Domain.GAUSSIAN:
        def to_u(X):
            u = np.tan(np.pi * (X - 0.5))
            dens = np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)
            rho = np.prod(np.pi * (1.0 + u * u) * dens, axis=1)
            return u, rho
    elif dom is Domain.LAGUERRE:
        def to_u(X):
            u = np.tan(0.5 * np.pi * X)
            rho = np.prod(0.5 * np.pi * (1.0 + u * u) * np.exp(-u), axis=1)
            return u, rho
    else:  # pragma: no cover
        raise ValueError(f"no tangens map for domain {dom}")

    base_inner = integrand.inner_batch

    def inner(Z, X, w):
        u, rho = to_u(np.asarray(X, float))
        return base_inner(Z, u, w * rho)

    phi_point = None
    if integrand.phi_point is not None:
        base_phi = integrand.phi_point

        def phi_point(z, x):
            u, rho = to_u(np.atleast_2d(np.asarray(x, float)))
            return float(base_phi(z, u[0]) * rho[0])

    return NestedIntegrand(
        name=integrand.name + "+tan",
        outer_dim=integrand.outer_dim, inner_dim=d2,
        outer_domain=integrand.outer_domain, inner_domain=Domain.UNIT_CUBE,
        theta=integrand.theta,
        inner_batch=inner, link_batch=integrand.link_batch,
        holder_alpha=integrand.holder_alpha,
        exact_value=integrand.exact_value,
        clamp_floor=integrand.clamp_floor,
        phi_point=phi_point,
    )


def outer_tangens_wrapped(integrand: NestedIntegrand) -> NestedIntegrand:
    """Rewrite an unbounded outer integral as a unit-cube integral.

    Outer nodes x map coordinatewise to z = tan(pi (x - 1/2)); the
    Jacobian times the outer density multiplies the linked values, so
    the linking output picks up the change-of-measure factor.
    """
    dom = integrand.outer_domain
    if dom is Domain.UNIT_CUBE:
        return integrand
    if dom is not Domain.GAUSSIAN:
        raise ValueError(f"no outer tangens map for domain {dom}")

    def to_z(X):
        z = np.tan(np.pi * (X - 0.5))
        dens = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        rho = np.prod(np.pi * (1.0 + z * z) * dens, axis=1)
        return z, rho

    base_inner = integrand.inner_batch
    base_link = integrand.link_batch

    def inner(X, U, w):
        z, _ = to_z(np.atleast_2d(np.asarray(X, float)))
        return base_inner(z, U, w)

    def link(X, t):
        z, rho = to_z(np.atleast_2d(np.asarray(X, float)))
        g = np.asarray(base_link(z, t), float)
        return g * rho if g.ndim == 1 else g * rho[:, None]

    return NestedIntegrand(
        name=integrand.name + "+outertan",
        outer_dim=integrand.outer_dim, inner_dim=integrand.inner_dim,
        outer_domain=Domain.UNIT_CUBE, inner_domain=integrand.inner_domain,
        theta=integrand.theta,
        inner_batch=inner, link_batch=link,
        holder_alpha=integrand.holder_alpha,
        exact_value=integrand.exact_value,
        clamp_floor=integrand.clamp_floor,
    )


# ---------------------------------------------------------------------------
# synthetic test integrand


def synthetic_exact_value(theta: float) -> float:
    """Closed form of the synthetic double integral (log-Gamma average)."""
    return float(-gammaln(theta) - theta + (theta - 1.0) * math.log(theta)
                 + gammaln(theta + 1.0) + 0.5 * math.log(2.0 * math.pi))


def synthetic_integrand(theta: float = 4.0) -> NestedIntegrand:
    """phi(z, u) = u^(z + theta - 1) on Exp(1), linked through log.

    The inner integral is Gamma(z + theta); the outer average of its log
    has the closed form stored in ``exact_value``.
    """
    if theta <= 0:
        raise ValueError("synthetic integrand needs theta > 0")

    def inner(Z, U, w):
        return backends.synthetic_inner(
            np.ascontiguousarray(Z[:, 0]), np.ascontiguousarray(U[:, 0]),
            np.ascontiguousarray(w), float(theta))

    def link(Z, t):
        return np.log(t)

    return NestedIntegrand(
        name="synthetic",
        outer_dim=1, inner_dim=1,
        outer_domain=Domain.UNIT_CUBE, inner_domain=Domain.LAGUERRE,
        theta=np.array([theta]),
        inner_batch=inner, link_batch=link,
        holder_alpha=1.0,
        exact_value=synthetic_exact_value(theta),
        clamp_floor=_LOG_CLAMP,
        phi_point=lambda z, u: float(u[0] ** (z[0] + theta - 1.0)),
    )


# ---------------------------------------------------------------------------
# Mixed Logit


def logit_kernel(z: np.ndarray, u: np.ndarray, i: int) -> float:
    """Softmax choice probability exp((zu)_i) / sum_j exp((zu)_j)."""
    v = np.asarray(z, float) @ np.asarray(u, float)
    v = v - v.max()
    e = np.exp(v)
    return float(e[i] / e.sum())


@dataclass(frozen=True)
class MixedLogitSpec:
    """Mixed Logit model: J alternatives, q taste dimensions.

    The taste covariance is scale * equicorrelated; ``taste_scale -> 0``
    collapses the mixing law to a point mass at the mean.
    """

    n_alternatives: int = 3
    taste_dim: int = 4
    mean_taste: np.ndarray | None = None
    taste_cov: EquiCorrMatrix | None = None
    taste_scale: float = 1.0

    def __post_init__(self):
        if self.mean_taste is None:
            object.__setattr__(self, "mean_taste", np.zeros(self.taste_dim))
        if self.taste_cov is None:
            object.__setattr__(self, "taste_cov",
                               EquiCorrMatrix(self.taste_dim, 0.1))
        if self.taste_cov.dim != self.taste_dim:
            raise ValueError("taste covariance dimension mismatch")

    @property
    def chol_scaled(self) -> np.ndarray:
        return self.taste_scale * self.taste_cov.chol_lower

    @property
    def outer_dim(self) -> int:
        return self.n_alternatives * self.taste_dim

    @property
    def inner_dim(self) -> int:
        return self.taste_dim


def _mixl_inner_factory(spec: MixedLogitSpec, alt_of_node):
    j, q = spec.n_alternatives, spec.taste_dim
    lch = spec.chol_scaled
    u0 = spec.mean_taste

    def inner(Z, G, w):
        zmats = np.ascontiguousarray(Z.reshape(-1, j, q))
        umat = np.ascontiguousarray(u0[None, :] + G @ lch.T)
        alts = alt_of_node(Z)
        return backends.logit_inner(zmats, alts, umat,
                                    np.ascontiguousarray(w))
    return inner


def mixed_logit_integrand(spec: MixedLogitSpec, alternative: int) -> NestedIntegrand:
    """Log choice probability of one fixed alternative.

    Outer: covariates z uniform on [0,1]^(J*q); inner: Gaussian taste
    mixing u = u0 + C g; linking F = log with the safety floor.
    """
    if not 0 <= alternative < spec.n_alternatives:
        raise ValueError("alternative index out of range")
    alts_const = lambda Z: np.full(Z.shape[0], alternative, dtype=np.int64)
    j, q = spec.n_alternatives, spec.taste_dim

    def phi_point(z, g):
        u = spec.mean_taste + spec.chol_scaled @ g
        return logit_kernel(z.reshape(j, q), u, alternative)

    return NestedIntegrand(
        name=f"mixed_logit[alt={alternative}]",
        outer_dim=spec.outer_dim, inner_dim=spec.inner_dim,
        outer_domain=Domain.UNIT_CUBE, inner_domain=Domain.GAUSSIAN,
        theta=np.concatenate([spec.mean_taste,
                              [spec.taste_cov.rho]]),
        inner_batch=_mixl_inner_factory(spec, alts_const),
        link_batch=lambda Z, t: np.log(t),
        holder_alpha=1.0,
        clamp_floor=_LOG_CLAMP,
        phi_point=phi_point,
    )


def mixed_logit_ml_integrand(spec: MixedLogitSpec,
                             data_seed: int = 0) -> NestedIntegrand:
    """Maximum-likelihood moment log P(y(z) | z) with simulated choices.

    The observed alternative at a node z is drawn from the model itself:
    a taste vector and Gumbel errors derived by hashing z decide the
    argmax utility.  The draw depends only on (z, data_seed), so the
    integrand is pure.
    """
    j, q = spec.n_alternatives, spec.taste_dim
    lch = spec.chol_scaled
    u0 = spec.mean_taste

    def alts(Z):
        out = np.empty(Z.shape[0], dtype=np.int64)
        for idx in range(Z.shape[0]):
            rng = _node_rng(Z[idx], data_seed)
            u = u0 + lch @ rng.standard_normal(q)
            gum = -np.log(-np.log(rng.random(j)))
            out[idx] = int(np.argmax(Z[idx].reshape(j, q) @ u + gum))
        return out

    return NestedIntegrand(
        name="mixed_logit_ml",
        outer_dim=spec.outer_dim, inner_dim=spec.inner_dim,
        outer_domain=Domain.UNIT_CUBE, inner_domain=Domain.GAUSSIAN,
        theta=np.concatenate([spec.mean_taste, [spec.taste_cov.rho]]),
        inner_batch=_mixl_inner_factory(spec, alts),
        link_batch=lambda Z, t: np.log(t),
        holder_alpha=1.0,
        clamp_floor=_LOG_CLAMP,
    )


def ml_objective_term(integrand: NestedIntegrand, family2, z, l2: int,
                      seed: int | None = None) -> float:
    """One simulated-likelihood term log P(y(z)|z) at a given inner level."""
    from .stp import inner_eval
    t = inner_eval(integrand, family2, z, l2, seed)
    return math.log(max(t, _LOG_CLAMP))


# ---------------------------------------------------------------------------
# Multinomial Probit via the Genz transform


@dataclass(frozen=True)
class ProbitSpec:
    """Multinomial Probit: J alternatives, q covariate dimensions."""

    n_alternatives: int = 5
    cov_dim: int = 3
    theta: np.ndarray | None = None
    error_cov: EquiCorrMatrix | None = None
    chol_diff: np.ndarray = field(init=False)  # (J, J-1, J-1) lower factors

    def __post_init__(self):
        if self.theta is None:
            object.__setattr__(self, "theta", np.ones(self.cov_dim))
        if self.error_cov is None:
            object.__setattr__(self, "error_cov",
                               EquiCorrMatrix(self.n_alternatives, 0.1))
        if self.n_alternatives - 2 < 1:
            raise ValueError("Probit needs J >= 3 (inner dimension J-2 >= 1)")
        chols = np.empty((self.n_alternatives, self.n_alternatives - 1,
                          self.n_alternatives - 1))
        for k in range(self.n_alternatives):
            tilde = differenced_covariance(self.error_cov.sigma, k)
            try:
                chols[k] = np.linalg.cholesky(tilde)
            except np.linalg.LinAlgError as exc:
                raise ValueError(
                    f"differenced covariance for alternative {k} "
                    "not positive definite") from exc
        object.__setattr__(self, "chol_diff", chols)
        self.chol_diff.setflags(write=False)

    @property
    def outer_dim(self) -> int:
        return self.n_alternatives * self.cov_dim

    @property
    def inner_dim(self) -> int:
        return self.n_alternatives - 2


def genz_factors(spec: ProbitSpec, w: np.ndarray, u: np.ndarray,
                 alternative: int = 0) -> float:
    """Product of the sequentially conditioned CDF factors at one cube point.

    ``w`` holds the utility differences of the chosen alternative against
    the others; ``u`` lies strictly inside (0,1)^(J-2).
    """
    chol = spec.chol_diff[alternative]
    return _genz_reference(chol, np.asarray(w, float), np.asarray(u, float))


def _genz_reference(chol: np.ndarray, w: np.ndarray, u: np.ndarray) -> float:
    """Straightforward scalar Genz recursion (reference implementation)."""
    m = w.shape[0]
    eps = 1e-15
    wh = float(backends.norm_cdf(np.array([w[0] / chol[0, 0]]))[0])
    prod = wh
    xs = np.empty(m - 1) if m > 1 else None
    for i in range(1, m):
        arg = min(max(u[i - 1] * wh, eps), 1.0 - eps)
        xs[i - 1] = backends.norm_icdf(np.array([arg]))[0]
        s = float(chol[i, :i] @ xs[:i])
        wh = float(backends.norm_cdf(np.array([(w[i] - s) / chol[i, i]]))[0])
        prod *= wh
    return prod


def _utility_diffs(zmats: np.ndarray, theta: np.ndarray,
                   alts: np.ndarray) -> np.ndarray:
    """w(z) = ((z theta)_k - (z theta)_i)_{i != k} per node."""
    v = zmats @ theta  # (Nz, J)
    nz, j = v.shape
    w = np.empty((nz, j - 1))
    for idx in range(nz):
        k = alts[idx]
        others = np.concatenate([v[idx, :k], v[idx, k + 1:]])
        w[idx] = v[idx, k] - others
    return w


def mnp_gmm_integrand(spec: ProbitSpec, data_seed: int = 0,
                      fd_step: float = 1e-4) -> NestedIntegrand:
    """GMM moment of the Multinomial Probit: grad_theta P / P at the
    simulated choice.

    Choices are simulated from the model per node (argmax of utilities
    with a hashed Gaussian error draw).  The theta-gradient uses central
    finite differences sharing one inner point set, so the difference
    operators keep their decay.
    """
    j, q = spec.n_alternatives, spec.cov_dim
    lch = spec.error_cov.chol_lower
    theta = spec.theta
    h = fd_step

    # theta variants: base, then (+h, -h) per coordinate
    variants = [theta]
    for c in range(q):
        e = np.zeros(q)
        e[c] = h
        variants.extend([theta + e, theta - e])
    variants = np.array(variants)  # (2q+1, q)

    def alts(Z):
        out = np.empty(Z.shape[0], dtype=np.int64)
        for idx in range(Z.shape[0]):
            rng = _node_rng(Z[idx], data_seed)
            eps = lch @ rng.standard_normal(j)
            out[idx] = int(np.argmax(Z[idx].reshape(j, q) @ theta + eps))
        return out

    def inner(Z, U, wts):
        nz = Z.shape[0]
        zmats = Z.reshape(nz, j, q)
        chosen = alts(Z)
        nv = variants.shape[0]
        wstack = np.empty((nz * nv, j - 1))
        for v in range(nv):
            wstack[v * nz:(v + 1) * nz] = _utility_diffs(
                zmats, variants[v], chosen)
        # all nodes share the equicorrelated differenced factor
        vals = backends.genz_inner(np.ascontiguousarray(wstack),
                                   np.ascontiguousarray(spec.chol_diff[0]),
                                   np.ascontiguousarray(U),
                                   np.ascontiguousarray(wts))
        return vals.reshape(nv, nz).T  # (Nz, 2q+1), column 0 = P(theta)

    def link(Z, t):
        p = t[:, 0]
        grad = np.empty((t.shape[0], q))
        for c in range(q):
            grad[:, c] = (t[:, 1 + 2 * c] - t[:, 2 + 2 * c]) / (2.0 * h)
        return grad / p[:, None]

    return NestedIntegrand(
        name="mnp_gmm",
        outer_dim=spec.outer_dim, inner_dim=spec.inner_dim,
        outer_domain=Domain.UNIT_CUBE, inner_domain=Domain.UNIT_CUBE,
        theta=theta.copy(),
        inner_batch=inner, link_batch=link,
        holder_alpha=1.0,
        clamp_floor=_LOG_CLAMP,
    )


def mnp_probability_integrand(spec: ProbitSpec,
                              alternative: int = 0) -> NestedIntegrand:
    """Plain MNP choice probability of a fixed alternative (no linking)."""
    j, q = spec.n_alternatives, spec.cov_dim
    theta = spec.theta

    def inner(Z, U, wts):
        zmats = Z.reshape(-1, j, q)
        chosen = np.full(Z.shape[0], alternative, dtype=np.int64)
        w = _utility_diffs(zmats, theta, chosen)
        return backends.genz_inner(np.ascontiguousarray(w),
                                   np.ascontiguousarray(
                                       spec.chol_diff[alternative]),
                                   np.ascontiguousarray(U),
                                   np.ascontiguousarray(wts))

    return NestedIntegrand(
        name=f"mnp_probability[alt={alternative}]",
        outer_dim=spec.outer_dim, inner_dim=spec.inner_dim,
        outer_domain=Domain.UNIT_CUBE, inner_domain=Domain.UNIT_CUBE,
        theta=theta.copy(),
        inner_batch=inner, link_batch=lambda Z, t: t,
        holder_alpha=1.0,
    )


# ---------------------------------------------------------------------------
# Mixed Probit


@dataclass(frozen=True)
class MixedProbitSpec:
    """Mixed Probit: Gaussian mixing over the Probit coefficient vector.

    ``mixing_scale -> 0`` collapses the mixture to the plain Probit
    probability at the mixing mean.
    """

    covariates: np.ndarray            # (J, q) fixed design
    error_cov: EquiCorrMatrix         # inner Gaussian errors
    mixing_mean: np.ndarray           # theta_0, length q
    mixing_cov: EquiCorrMatrix        # Xi
    mixing_scale: float = 1.0

    def __post_init__(self):
        j, q = self.covariates.shape
        if self.error_cov.dim != j:
            raise ValueError("error covariance dimension mismatch")
        if self.mixing_cov.dim != q or self.mixing_mean.shape != (q,):
            raise ValueError("mixing dimension mismatch")
        if j - 2 < 1:
            raise ValueError("Mixed Probit needs J >= 3")

    @classmethod
    def benchmark_config(cls) -> "MixedProbitSpec":
        """q=4, J=5, rho 0.2 errors, rho 0.1 mixing, uniform covariates."""
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(0)))
        z = rng.random((5, 4))
        return cls(covariates=z,
                   error_cov=EquiCorrMatrix(5, 0.2),
                   mixing_mean=np.full(4, 0.2),
                   mixing_cov=EquiCorrMatrix(4, 0.1))

    @property
    def outer_dim(self) -> int:
        return self.covariates.shape[1]

    @property
    def inner_dim(self) -> int:
        return self.covariates.shape[0] - 2


def mixed_probit_integrand(spec: MixedProbitSpec,
                           alternative: int = 0) -> NestedIntegrand:
    """Mixed Probit choice probability for one alternative.

    The outer integral over the mixing density is reparameterized to the
    standard Gaussian measure (theta = theta_0 + C_Xi g), making the
    linking function the identity.
    """
    j, q = spec.covariates.shape
    zmat = spec.covariates
    lxi = spec.mixing_scale * spec.mixing_cov.chol_lower
    tilde = differenced_covariance(spec.error_cov.sigma, alternative)
    chol = np.linalg.cholesky(tilde)

    def inner(G, U, wts):
        thetas = spec.mixing_mean[None, :] + G @ lxi.T  # (Nz, q)
        v = thetas @ zmat.T                              # (Nz, J)
        nz = v.shape[0]
        w = np.empty((nz, j - 1))
        k = alternative
        for idx in range(nz):
            others = np.concatenate([v[idx, :k], v[idx, k + 1:]])
            w[idx] = v[idx, k] - others
        return backends.genz_inner(np.ascontiguousarray(w),
                                   np.ascontiguousarray(chol),
                                   np.ascontiguousarray(U),
                                   np.ascontiguousarray(wts))

    return NestedIntegrand(
        name=f"mixed_probit[alt={alternative}]",
        outer_dim=q, inner_dim=j - 2,
        outer_domain=Domain.GAUSSIAN, inner_domain=Domain.UNIT_CUBE,
        theta=spec.mixing_mean.copy(),
        inner_batch=inner, link_batch=lambda Z, t: t,
        holder_alpha=1.0,
    )
