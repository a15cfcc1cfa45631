"""Leveled d-dimensional cubature families.

Every family exposes ``points(level, seed)`` returning a weighted point
set whose size follows a dyadic schedule: 2^level points for MC, QMC,
Frolov and optimal-weights families, roughly 2^level * level^(d-1) for
Smolyak sparse grids, and (2^level + 1)^d for full product grids.
Families declare their main convergence rate ``rate_s`` plus the
secondary log exponent and count exponent used by the balancing plan.

Monte Carlo point sets are prefix-nested for a fixed seed: level l
reproduces the first half of level l+1.  QMC sequences drop the initial
origin point so inverse-CDF maps to unbounded domains stay finite.
"""
from __future__ import annotations

import enum
import itertools
import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.stats import qmc as _scipy_qmc

from . import backends
from .rules1d import Psi, Rule1D, WeightedInterval, clenshaw_curtis, gauss_rule, generalized_gauss


class Domain(enum.Enum):
    """Coordinate measure of a cubature family."""

    UNIT_CUBE = "unit_cube"   # [0,1]^d, Lebesgue
    GAUSSIAN = "gaussian"     # R^d, standard normal
    LAGUERRE = "laguerre"     # [0,inf)^d, Exp(1) product


@dataclass(frozen=True)
class PointSet:
    """Weighted points of one cubature level."""

    dim: int
    points: np.ndarray   # (n, dim)
    weights: np.ndarray  # (n,)

    def __post_init__(self):
        if self.points.shape != (self.weights.shape[0], self.dim):
            raise ValueError("points/weights shape mismatch")
        self.points.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def dumps(self) -> str:
        """Plain-text dump: one point per line, coordinates then weight."""
        lines = []
        for row, w in zip(self.points, self.weights):
            coords = " ".join(f"{c:.17g}" for c in row)
            lines.append(f"{coords} {w:.17g}")
        return "\n".join(lines) + "\n"

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.dumps())


class UnsupportedDimensionError(ValueError):
    pass


class IllConditionedKernelError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# coordinate maps


def _map_uniform(u: np.ndarray, domain: Domain) -> np.ndarray:
    """Map uniform (0,1) coordinates to the domain's measure (per axis)."""
    if domain is Domain.UNIT_CUBE:
        return u
    if domain is Domain.GAUSSIAN:
        return backends.norm_icdf(np.clip(u.ravel(), 1e-16, 1.0 - 1e-16)).reshape(u.shape)
    return -np.log1p(-u)  # Exp(1) inverse CDF


# ---------------------------------------------------------------------------
# random and low-discrepancy families


def mc_points(d: int, level: int, seed: int, domain: Domain = Domain.UNIT_CUBE) -> PointSet:
    """2^level i.i.d. draws from the domain measure, uniform weights.

    For a fixed seed the draw stream is shared across levels, so the
    points of level l are the first half of the points of level l+1.
    """
    if level < 1:
        raise ValueError("mc_points needs level >= 1")
    n = 2 ** level
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    u = rng.random((n, d))
    pts = _map_uniform(u, domain)
    w = np.full(n, 1.0 / n)
    return PointSet(d, pts, w)


_SOBOL_MAXDIM = 64


def sobol_points(d: int, level: int, domain: Domain = Domain.UNIT_CUBE) -> PointSet:
    """First 2^level Sobol points (sequence index 1 onward), uniform weights."""
    if level < 1:
        raise ValueError("sobol_points needs level >= 1")
    if d > _SOBOL_MAXDIM:
        raise UnsupportedDimensionError(
            f"sobol_points supports d <= {_SOBOL_MAXDIM}, got {d}")
    n = 2 ** level
    eng = _scipy_qmc.Sobol(d=d, scramble=False)
    eng.fast_forward(1)  # drop the origin
    u = eng.random(n)
    pts = _map_uniform(u, domain)
    return PointSet(d, pts, np.full(n, 1.0 / n))


def _primes(k: int) -> list[int]:
    out = []
    cand = 2
    while len(out) < k:
        if all(cand % p for p in out):
            out.append(cand)
        cand += 1
    return out


_HALTON_MAXDIM = 64
_HALTON_PRIMES = _primes(_HALTON_MAXDIM)


def _radical_inverse(idx: np.ndarray, base: int) -> np.ndarray:
    out = np.zeros(idx.shape, dtype=float)
    denom = float(base)
    idx = idx.copy()
    while np.any(idx > 0):
        out += (idx % base) / denom
        idx //= base
        denom *= base
    return out


def halton_points(d: int, level: int, domain: Domain = Domain.UNIT_CUBE) -> PointSet:
    """First 2^level Halton points (index 1 onward), uniform weights."""
    if level < 1:
        raise ValueError("halton_points needs level >= 1")
    if d > _HALTON_MAXDIM:
        raise UnsupportedDimensionError(
            f"halton_points supports d <= {_HALTON_MAXDIM}, got {d}")
    n = 2 ** level
    idx = np.arange(1, n + 1, dtype=np.int64)
    u = np.column_stack([_radical_inverse(idx, _HALTON_PRIMES[k]) for k in range(d)])
    pts = _map_uniform(u, domain)
    return PointSet(d, pts, np.full(n, 1.0 / n))


# ---------------------------------------------------------------------------
# Frolov lattice


def _frolov_generator(d: int) -> np.ndarray:
    """Unit-determinant generator from the roots of prod(x-(2j-1)) - 1."""
    poly = np.array([1.0])
    for j in range(1, d + 1):
        poly = np.convolve(poly, [1.0, -(2.0 * j - 1.0)])
    poly[-1] -= 1.0
    roots = np.sort(np.roots(poly).real)
    t = np.vander(roots, d, increasing=True)  # rows: (1, xi, xi^2, ...)
    det = abs(np.linalg.det(t))
    return t / det ** (1.0 / d)


def _lattice_points_in_cube(gen: np.ndarray, c: float) -> np.ndarray:
    """All points of c*gen(Z^d) strictly inside (0,1)^d."""
    d = gen.shape[0]
    inv = np.linalg.inv(c * gen)
    corners = np.array(list(itertools.product((0.0, 1.0), repeat=d)))
    pre = corners @ inv.T
    lo = np.floor(pre.min(axis=0)).astype(np.int64)
    hi = np.ceil(pre.max(axis=0)).astype(np.int64)
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    total = int(np.prod([len(a) for a in axes]))
    if total > 5 * 10 ** 7:
        raise UnsupportedDimensionError(
            f"Frolov enumeration box too large ({total} candidates)")
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    pts = (grid @ (c * gen).T)
    inside = np.all((pts > 0.0) & (pts < 1.0), axis=1)
    return pts[inside]


def frolov_points(d: int, level: int) -> PointSet:
    """Frolov lattice points in (0,1)^d with uniform weights 2^-level.

    The unit-determinant lattice is dilated by exactly 2^(-level/d), so
    the weight 2^-level is the exact lattice cell volume and the
    enumerated count lands within a factor of two of 2^level on its own.
    """
    if d not in (1, 2, 3, 4):
        raise UnsupportedDimensionError(
            f"frolov_points supports d in 1..4, got {d}")
    if level < 1:
        raise ValueError("frolov_points needs level >= 1")
    n_target = 2 ** level
    gen = _frolov_generator(d)
    pts = _lattice_points_in_cube(gen, n_target ** (-1.0 / d))
    order = np.lexsort(pts.T[::-1])
    pts = pts[order]
    return PointSet(d, pts, np.full(pts.shape[0], 1.0 / n_target))


# ---------------------------------------------------------------------------
# 1-D rule families on the dyadic size schedule (1, 3, 5, 9, ..., 2^j + 1)


@dataclass(frozen=True)
class RuleFamily:
    """Leveled 1-D rules for sparse-grid and product constructions."""

    name: str
    domain: WeightedInterval
    nested: bool
    _at: callable

    def level(self, j: int) -> Rule1D:
        if j < 0:
            raise ValueError("rule level must be >= 0")
        return self._at(j)

    @staticmethod
    def size(j: int) -> int:
        return 1 if j == 0 else 2 ** j + 1


def cc_rules() -> RuleFamily:
    """Nested Clenshaw-Curtis family on [-1,1]."""
    return RuleFamily("cc", WeightedInterval.SYMMETRIC_INTERVAL, True,
                      lambda j: clenshaw_curtis(j))


def gauss_rules(domain: WeightedInterval) -> RuleFamily:
    """Gaussian family (Legendre/Laguerre/Hermite by domain)."""
    return RuleFamily(f"gauss-{domain.value}", domain, False,
                      lambda j: gauss_rule(domain, RuleFamily.size(j)))


def gengauss_rules(psi: Psi) -> RuleFamily:
    """Generalized Gaussian family on [0,1] for the transform psi."""
    return RuleFamily(f"gengauss-{psi.value}", WeightedInterval.UNIT_INTERVAL,
                      False, lambda j: generalized_gauss(psi, RuleFamily.size(j)))


def _axis_nodes_weights(rule: Rule1D, domain: Domain) -> tuple[np.ndarray, np.ndarray]:
    """Adapt a 1-D rule to the family's coordinate measure (mass 1)."""
    x, w = rule.nodes, rule.weights
    rd = rule.domain
    if domain is Domain.UNIT_CUBE:
        if rd is WeightedInterval.UNIT_INTERVAL:
            return x, w
        if rd is WeightedInterval.SYMMETRIC_INTERVAL:
            return 0.5 * (x + 1.0), 0.5 * w
    elif domain is Domain.GAUSSIAN:
        if rd is WeightedInterval.REAL_LINE:
            return math.sqrt(2.0) * x, w / math.sqrt(math.pi)
    elif domain is Domain.LAGUERRE:
        if rd is WeightedInterval.HALF_LINE:
            return x, w
    raise ValueError(f"rule on {rd} incompatible with domain {domain}")


def _tensor_grid(axes: list[tuple[np.ndarray, np.ndarray]]) -> tuple[np.ndarray, np.ndarray]:
    pts_axes = [a[0] for a in axes]
    w_axes = [a[1] for a in axes]
    mesh = np.meshgrid(*pts_axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    w = w_axes[0]
    for wa in w_axes[1:]:
        w = np.multiply.outer(w, wa)
    return pts, w.ravel()


def _merge_points(pts: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sum weights of exactly equal points; lexicographic output order."""
    uniq, inv = np.unique(pts, axis=0, return_inverse=True)
    merged = np.zeros(uniq.shape[0])
    np.add.at(merged, inv.ravel(), w)
    return uniq, merged


def smolyak_points(rules: RuleFamily, d: int, level: int,
                   domain: Domain | None = None,
                   index_filter=None) -> PointSet:
    """Smolyak sparse grid over a 1-D rule family.

    Combination-technique form over axis levels j >= 0 with |j|_1 <=
    level; duplicate nodes merged with summed weights (weights may be
    negative).  In one dimension this collapses to the 1-D rule with
    2^level + 1 nodes.  ``index_filter`` (tests only) replaces the
    simplex membership predicate by another downward-closed one on the
    box [0, level]^d.
    """
    if level < 1:
        raise ValueError("smolyak_points needs level >= 1")
    member = index_filter if index_filter is not None else (
        lambda j: sum(j) <= level)
    max_axis = level
    all_pts = []
    all_w = []
    # enumerate downward-closed index set and combination coefficients:
    # coeff(j) = sum over e in {0,1}^d with j+e in set of (-1)^{|e|}
    idx_box = itertools.product(*(range(max_axis + 1) for _ in range(d)))
    axes_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def axis(j: int):
        if j not in axes_cache:
            rule = rules.level(j)
            axes_cache[j] = _axis_nodes_weights(rule, domain) if domain is not None \
                else (rule.nodes, rule.weights)
        return axes_cache[j]

    for j in idx_box:
        if not member(j):
            continue
        coeff = 0
        for e in itertools.product((0, 1), repeat=d):
            je = tuple(a + b for a, b in zip(j, e))
            if member(je):
                coeff += (-1) ** sum(e)
        if coeff == 0:
            continue
        pts, w = _tensor_grid([axis(ji) for ji in j])
        all_pts.append(pts)
        all_w.append(coeff * w)
    pts, w = _merge_points(np.concatenate(all_pts), np.concatenate(all_w))
    return PointSet(d, pts, w)


def product_points(rules: RuleFamily, d: int, level: int,
                   domain: Domain | None = None) -> PointSet:
    """Full tensor grid of the 1-D rule at size 2^level + 1 per axis."""
    if level < 1:
        raise ValueError("product_points needs level >= 1")
    n1 = RuleFamily.size(level)
    if n1 ** d > 10 ** 7:
        raise ValueError(f"product grid would have {n1 ** d} > 1e7 nodes")
    rule = rules.level(level)
    ax = _axis_nodes_weights(rule, domain) if domain is not None \
        else (rule.nodes, rule.weights)
    pts, w = _tensor_grid([ax] * d)
    return PointSet(d, pts, w)


# ---------------------------------------------------------------------------
# optimal weights in anchored Sobolev spaces on [0,1]^d


def _kernel_1d(x: np.ndarray, y: np.ndarray, r: int) -> np.ndarray:
    mn = np.minimum(x, y)
    if r == 1:
        return 1.0 + mn
    return 1.0 + x * y + mn ** 3 / 3.0 + mn ** 2 * np.abs(x - y) / 2.0


def _kernel_integral_1d(x: np.ndarray, r: int) -> np.ndarray:
    if r == 1:
        return 1.0 + x - 0.5 * x ** 2
    return 1.0 + x / 2.0 + x ** 2 / 4.0 - x ** 3 / 6.0 + x ** 4 / 24.0


def optimal_weights(points: np.ndarray, r: int = 1) -> PointSet:
    """Worst-case-optimal weights for given nodes on [0,1]^d.

    Solves K w = b with the tensor H^r_mix reproducing kernel matrix K
    and its exact coordinatewise integrals b.  Weights may be negative.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] > 4096:
        raise ValueError("optimal_weights limited to 4096 nodes (dense solve)")
    if r not in (1, 2):
        raise ValueError("smoothness r must be 1 or 2")
    n, d = points.shape
    if np.unique(points, axis=0).shape[0] != n:
        raise ValueError("optimal_weights requires pairwise distinct points")
    K = np.ones((n, n))
    b = np.ones(n)
    for k in range(d):
        col = points[:, k]
        K *= _kernel_1d(col[:, None], col[None, :], r)
        b *= _kernel_integral_1d(col, r)
    factor = _factor_with_condition_gate(K)
    w = cho_solve(factor, b)
    return PointSet(d, points, np.asarray(w))


def _factor_with_condition_gate(K: np.ndarray):
    """Cholesky factor of K (jittered on breakdown), condition-gated.

    The smallest eigenvalue is estimated by inverse power iteration on
    the factorization; estimates above 1e14 are rejected with advice.
    """
    n = K.shape[0]
    jitter = 0.0
    try:
        factor = cho_factor(K, lower=True)
    except np.linalg.LinAlgError:
        jitter = 1e-12 * np.trace(K) / n
        try:
            factor = cho_factor(K + jitter * np.eye(n), lower=True)
        except np.linalg.LinAlgError as exc:
            raise IllConditionedKernelError(
                "kernel matrix not factorizable even with jitter; "
                "perturb the nodes or use fewer points") from exc
    lam_max = float(np.max(np.sum(np.abs(K), axis=1)))  # Gershgorin bound
    rng = np.random.Generator(np.random.Philox(12345))
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam_min = lam_max
    for _ in range(8):
        v = cho_solve(factor, v)
        nv = np.linalg.norm(v)
        lam_min = 1.0 / nv
        v /= nv
    lam_min = max(lam_min - jitter, 1e-300)
    if lam_max / lam_min > 1e14:
        raise IllConditionedKernelError(
            f"kernel condition estimate {lam_max / lam_min:.2e} exceeds 1e14; "
            "jitter the nodes or use fewer points")
    return factor


# ---------------------------------------------------------------------------
# leveled family wrapper


_FROLOV_T = {1: 0.0, 2: 0.5, 3: 1.0, 4: 1.5}


@dataclass
class CubatureFamily:
    """A leveled cubature family with declared rate parameters.

    ``rate_s`` is the main convergence exponent, ``log_exponent_t`` the
    secondary log power, ``count_exponent_q`` the node-count log power
    (d-1 for sparse grids, 0 otherwise).
    """

    kind: str
    dim: int
    domain: Domain
    rate_s: float
    log_exponent_t: float
    count_exponent_q: int
    randomized: bool
    nested_levels: bool
    rules: RuleFamily | None = None
    smoothness_r: int = 2
    max_level: int = 30
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def points(self, level: int, seed: int | None = None) -> PointSet:
        if level < 1:
            raise ValueError(f"{self.kind}: level must be >= 1")
        if level > self.max_level:
            raise ValueError(
                f"{self.kind}: level {level} exceeds max {self.max_level}")
        key = (level, seed if self.randomized else None)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        ps = self._generate(level, seed)
        with self._lock:
            ps = self._cache.setdefault(key, ps)
        return ps

    def count(self, level: int, seed: int | None = None) -> int:
        if self.kind in ("mc", "sobol", "halton", "optimal_weights"):
            if level < 1 or level > self.max_level:
                raise ValueError(f"{self.kind}: level {level} out of range")
            return 2 ** level
        if self.kind == "product":
            return RuleFamily.size(level) ** self.dim
        return self.points(level, seed).n

    def _generate(self, level: int, seed: int | None) -> PointSet:
        if self.kind == "mc":
            if seed is None:
                raise ValueError("mc family needs a seed")
            return mc_points(self.dim, level, seed, self.domain)
        if self.kind == "sobol":
            return sobol_points(self.dim, level, self.domain)
        if self.kind == "halton":
            return halton_points(self.dim, level, self.domain)
        if self.kind == "frolov":
            return frolov_points(self.dim, level)
        if self.kind == "smolyak":
            return smolyak_points(self.rules, self.dim, level, self.domain)
        if self.kind == "product":
            return product_points(self.rules, self.dim, level, self.domain)
        if self.kind == "optimal_weights":
            if seed is None:
                raise ValueError("optimal_weights family needs a seed")
            base = mc_points(self.dim, level, seed, self.domain)
            return optimal_weights(base.points, self.smoothness_r)
        raise ValueError(f"unknown family kind {self.kind!r}")


def make_family(kind: str, d: int, domain: Domain = Domain.UNIT_CUBE,
                r: int = 2, psi: Psi = Psi.NEG_LOG1M) -> CubatureFamily:
    """Build a cubature family by kind name.

    Kinds: ``mc``, ``sobol``, ``halton``, ``frolov``, ``sg-cc``,
    ``sg-gauss``, ``sg-gengauss``, ``prod-cc``, ``prod-gauss``,
    ``optw`` (optimal weights over MC nodes, smoothness ``r``).
    """
    if kind == "mc":
        return CubatureFamily("mc", d, domain, 0.5, 0.0, 0, True, True)
    if kind in ("sobol", "halton"):
        return CubatureFamily(kind, d, domain, 1.0, float(d), 0, False, True)
    if kind == "frolov":
        if domain is not Domain.UNIT_CUBE:
            raise ValueError("frolov requires the unit cube")
        return CubatureFamily("frolov", d, domain, float(r), _FROLOV_T[d], 0,
                              False, False, max_level=24 // d + 8)
    if kind in ("sg-cc", "sg-gauss", "sg-gengauss", "prod-cc", "prod-gauss"):
        if kind.endswith("cc"):
            if domain is not Domain.UNIT_CUBE:
                raise ValueError("Clenshaw-Curtis rules live on bounded domains")
            rules = cc_rules()
        elif kind.endswith("gengauss"):
            if domain is not Domain.UNIT_CUBE:
                raise ValueError("generalized Gauss rules live on [0,1]")
            rules = gengauss_rules(psi)
        else:
            rules = gauss_rules({
                Domain.UNIT_CUBE: WeightedInterval.UNIT_INTERVAL,
                Domain.GAUSSIAN: WeightedInterval.REAL_LINE,
                Domain.LAGUERRE: WeightedInterval.HALF_LINE,
            }[domain])
        if kind.startswith("sg"):
            s = float(r)
            return CubatureFamily("smolyak", d, domain, s,
                                  (d - 1) * (s + 0.5), d - 1, False,
                                  rules.nested, rules=rules,
                                  max_level=6 if kind.endswith("gengauss") else 30)
        s = float(r)
        max_level = int(math.floor(math.log2(10 ** (7.0 / d))))
        return CubatureFamily("product", d, domain, s / d, 0.0, 0, False,
                              rules.nested, rules=rules, max_level=max_level)
    if kind == "optw":
        if domain is not Domain.UNIT_CUBE:
            raise ValueError("optimal weights require the unit cube")
        return CubatureFamily("optimal_weights", d, domain, float(r),
                              float(r * d), 0, True, True, smoothness_r=r,
                              max_level=12)
    raise ValueError(f"unknown family kind {kind!r}")


FAMILY_KINDS = ("mc", "sobol", "halton", "frolov", "sg-cc", "sg-gauss",
                "sg-gengauss", "prod-cc", "prod-gauss", "optw")
