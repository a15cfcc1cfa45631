"""Full and sparse tensor-product quadrature for nested integrals.

A nested integrand is a pair (phi, F): an inner function integrated over
the inner domain and a linking function applied to that inner value
before the outer integration.  Writing Q1_l and Q2_l for leveled outer
and inner cubatures and Delta for their consecutive-level differences,
the two combined quadratures are

* FTP: the outer rule at level floor(L/sigma) applied to
  z -> F(z, theta, Q2_{floor(sigma L)}(phi, z)), and
* STP: the telescoped double sum of Delta1 o Delta2 over the triangular
  index set {sigma*l1 + l2/sigma <= L}, evaluated per outer level l1
  against the largest admissible inner level m(l1).

The balancing parameter sigma trades outer against inner accuracy;
``sigma_plan`` returns the optimal choice for given convergence rates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cubature import CubatureFamily, Domain, PointSet


class InnerEvaluationError(RuntimeError):
    """Inner quadrature produced a non-finite value."""


class NonFiniteContributionError(RuntimeError):
    """A difference-term contribution came out non-finite."""


# ---------------------------------------------------------------------------
# balancing plan


@dataclass(frozen=True)
class SigmaPlan:
    """Optimal balancing data for rates (s1, s2) and Hoelder exponent alpha."""

    s1: float
    s2: float
    alpha: float
    kappa: float
    sigma_star: float
    gamma_ftp: float
    gamma_stp: float


def sigma_plan(s1: float, s2: float, alpha: float) -> SigmaPlan:
    """Closed-form optimal sigma and cost exponents.

    sigma* = sqrt(s1 / (alpha s2)); the FTP error-per-cost exponent is
    alpha s1 s2 / (s1 + alpha s2) and the STP one is min(s1, alpha s2).
    """
    if s1 <= 0 or s2 <= 0 or alpha <= 0:
        raise ValueError("sigma_plan requires positive s1, s2, alpha")
    kappa = s1 / (alpha * s2)
    sigma = math.sqrt(kappa)
    gamma_ftp = alpha * s1 * s2 / (s1 + alpha * s2)
    gamma_stp = min(s1, alpha * s2)
    return SigmaPlan(s1, s2, alpha, kappa, sigma, gamma_ftp, gamma_stp)


# ---------------------------------------------------------------------------
# index sets


@dataclass(frozen=True)
class IndexSet:
    """Level pairs (l1, l2) >= 1 admitted by a triangular or box rule."""

    kind: str          # "sg" or "fg"
    sigma: float
    level: float
    pairs: tuple[tuple[int, int], ...]

    def __contains__(self, pair) -> bool:
        return tuple(pair) in set(self.pairs)


def _member(kind: str, sigma: float, level: float, l1: int, l2: int) -> bool:
    if kind == "sg":
        return sigma * l1 + l2 / sigma <= level
    return max(sigma * l1, l2 / sigma) <= level


def index_set(kind: str, sigma: float, level: float) -> IndexSet:
    """Enumerate the anisotropic index set {(l1,l2) >= 1} for sg or fg."""
    if kind not in ("sg", "fg"):
        raise ValueError("index set kind must be 'sg' or 'fg'")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    pairs = []
    l1 = 1
    while _member(kind, sigma, level, l1, 1):
        l2 = 1
        while _member(kind, sigma, level, l1, l2):
            pairs.append((l1, l2))
            l2 += 1
        l1 += 1
    if not pairs:
        raise ValueError(
            f"empty {kind} index set: L={level} too small for sigma={sigma}")
    return IndexSet(kind, sigma, level, tuple(pairs))


def _max_inner_level(kind: str, sigma: float, level: float, l1: int) -> int:
    """Largest admissible l2 for the given l1 (0 if none)."""
    if not _member(kind, sigma, level, l1, 1):
        return 0
    l2 = 1
    while _member(kind, sigma, level, l1, l2 + 1):
        l2 += 1
    return l2


# ---------------------------------------------------------------------------
# nested integrand


@dataclass(frozen=True)
class NestedIntegrand:
    """The pair (phi, F) with domains, parameters and batch evaluators.

    ``inner_batch(Z, U, w)`` returns the inner quadrature statistics for
    every outer node: shape (Nz,) for scalar models or (Nz, k) when the
    linking step needs several inner functionals (first column is the
    primary inner value that the safety floor applies to).
    ``link_batch(Z, T)`` applies F componentwise, returning (Nz,) or
    (Nz, q) for vector-valued moments.
    """

    name: str
    outer_dim: int
    inner_dim: int
    outer_domain: Domain
    inner_domain: Domain
    theta: np.ndarray
    inner_batch: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    link_batch: Callable[[np.ndarray, np.ndarray], np.ndarray]
    holder_alpha: float = 1.0
    exact_value: float | None = None
    clamp_floor: float | None = None
    phi_point: Callable | None = None  # diagnostics: phi(z, u) -> float

    def inner_stats(self, Z: np.ndarray, ps: PointSet) -> np.ndarray:
        t = self.inner_batch(np.atleast_2d(Z), ps.points, ps.weights)
        return t[:, None] if t.ndim == 1 else t


@dataclass(frozen=True)
class TensorQuadResult:
    """Outcome of one FTP or STP evaluation."""

    value: float | np.ndarray
    total_inner_evals: int
    total_outer_nodes: int
    total_work: int
    per_level: tuple[tuple[int, int, float | np.ndarray], ...]
    clamp_count: int = 0

    @property
    def value_norm(self) -> float:
        v = np.asarray(self.value, float)
        return float(abs(v)) if v.ndim == 0 else float(np.linalg.norm(v))


def derive_axis_seeds(seed: int | None) -> tuple[int | None, int | None]:
    """Split a master seed into independent outer/inner stream seeds."""
    if seed is None:
        return None, None
    children = np.random.SeedSequence(seed).spawn(2)
    return (int(children[0].generate_state(1, np.uint64)[0]),
            int(children[1].generate_state(1, np.uint64)[0]))


def _merge_signed(points_list, weights_list, dim) -> tuple[np.ndarray, np.ndarray]:
    pts = np.concatenate(points_list).reshape(-1, dim)
    w = np.concatenate(weights_list)
    uniq, inv = np.unique(pts, axis=0, return_inverse=True)
    merged = np.zeros(uniq.shape[0])
    np.add.at(merged, inv.ravel(), w)
    return uniq, merged


def _delta_nodes(family: CubatureFamily, l: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and signed weights of Delta_l = Q_l - Q_{l-1} (Q_0 = 0).

    Coinciding nodes of the two levels (prefix streams, nested grids)
    merge, so the difference is evaluated on the union point set.
    """
    top = family.points(l, seed)
    if l == 1:
        return top.points, top.weights.copy()
    prev = family.points(l - 1, seed)
    return _merge_signed([top.points, prev.points],
                         [top.weights, -prev.weights], family.dim)


def _delta_union_count(family: CubatureFamily, l: int, seed) -> int:
    """Node count of the Delta_l union without forcing point generation
    for nested families (level inclusion makes it the level-l count)."""
    if l == 1 or family.nested_levels:
        return family.count(l, seed)
    return _delta_nodes(family, l, seed)[0].shape[0]


def _linked_values(integrand: NestedIntegrand, Z: np.ndarray,
                   inner_ps: PointSet, level_tag) -> tuple[np.ndarray, int]:
    """F(z, theta, Q2(phi, z)) on all outer nodes, with clamp accounting."""
    t = integrand.inner_stats(Z, inner_ps)
    if not np.all(np.isfinite(t)):
        bad = int(np.argwhere(~np.isfinite(t))[0][0])
        raise InnerEvaluationError(
            f"{integrand.name}: non-finite inner value at inner level "
            f"{level_tag}, outer node {Z[bad]}")
    clamped = 0
    if integrand.clamp_floor is not None:
        below = t[:, 0] < integrand.clamp_floor
        clamped = int(np.count_nonzero(below))
        if clamped:
            t = t.copy()
            t[:, 0] = np.maximum(t[:, 0], integrand.clamp_floor)
    g = integrand.link_batch(Z, t if t.shape[1] > 1 else t[:, 0])
    return np.asarray(g, float), clamped


def _contract(weights: np.ndarray, g: np.ndarray):
    if g.ndim == 1:
        return float(np.sum(weights * g))
    return (weights[:, None] * g).sum(axis=0)


def inner_eval(integrand: NestedIntegrand, family2: CubatureFamily,
               z: np.ndarray, l2: int, seed: int | None = None) -> float:
    """Inner quadrature Q2_{l2}(phi, z) at a single outer node."""
    ps = family2.points(l2, seed)
    t = integrand.inner_stats(np.atleast_2d(np.asarray(z, float)), ps)
    val = float(t[0, 0])
    if not math.isfinite(val):
        u_bad = None
        if integrand.phi_point is not None:
            for u in ps.points:
                if not math.isfinite(float(integrand.phi_point(np.asarray(z, float), u))):
                    u_bad = u
                    break
        raise InnerEvaluationError(
            f"{integrand.name}: non-finite inner value at z={z}"
            + (f", u={u_bad}" if u_bad is not None else ""))
    return val


def delta2(integrand: NestedIntegrand, family2: CubatureFamily,
           z: np.ndarray, l2: int, seed: int | None = None):
    """Inner difference term: F at level l2 minus F at level l2-1."""
    if l2 < 1:
        raise ValueError("delta2 needs l2 >= 1")
    Z = np.atleast_2d(np.asarray(z, float))
    hi, _ = _linked_values(integrand, Z, family2.points(l2, seed), l2)
    if l2 == 1:
        out = hi[0]
    else:
        lo, _ = _linked_values(integrand, Z, family2.points(l2 - 1, seed), l2 - 1)
        out = hi[0] - lo[0]
    return float(out) if np.ndim(out) == 0 else out


def ftp_quadrature(integrand: NestedIntegrand, family1: CubatureFamily,
                   family2: CubatureFamily, sigma: float, level: float,
                   seed: int | None = None) -> TensorQuadResult:
    """Full tensor-product quadrature at balance sigma and level L."""
    # outer cap: largest l1 with sigma*l1 <= L; inner cap: largest l2 with l2/sigma <= L
    l1 = 0
    while _member("fg", sigma, level, l1 + 1, 1):
        l1 += 1
    l2 = _max_inner_level("fg", sigma, level, l1)
    if l1 < 1 or l2 < 1:
        raise ValueError(f"FTP needs floor(L/sigma) >= 1 and floor(sigma*L) >= 1, "
                         f"got levels ({l1}, {l2})")
    seed1, seed2 = derive_axis_seeds(seed)
    outer = family1.points(l1, seed1)
    inner = family2.points(l2, seed2)
    g, clamped = _linked_values(integrand, outer.points, inner, l2)
    value = _contract(outer.weights, g)
    work = outer.n * inner.n
    return TensorQuadResult(value, work, outer.n, work,
                            ((l1, l2, value),), clamped)


def stp_quadrature(integrand: NestedIntegrand, family1: CubatureFamily,
                   family2: CubatureFamily, sigma: float, level: float,
                   seed: int | None = None) -> TensorQuadResult:
    """Sparse tensor-product quadrature over the triangular index set.

    Collapsed per-outer-level form: for each l1 the outer difference
    Delta1_{l1} is applied to z -> F(z, theta, Q2_{m(l1)}(phi, z)) with
    m(l1) the largest admissible inner level.  Equals the literal double
    sum over Delta1 o Delta2 for deterministic rules.
    """
    index_set("sg", sigma, level)  # validates non-emptiness
    seed1, seed2 = derive_axis_seeds(seed)
    per_level = []
    contribs = []
    clamp_total = 0
    inner_evals = 0
    outer_nodes = 0
    l1 = 1
    while True:
        m = _max_inner_level("sg", sigma, level, l1)
        if m < 1:
            break
        zpts, zw = _delta_nodes(family1, l1, seed1)
        inner_ps = family2.points(m, seed2)
        g, clamped = _linked_values(integrand, zpts, inner_ps, m)
        contrib = _contract(zw, g)
        if not np.all(np.isfinite(np.asarray(contrib))):
            raise NonFiniteContributionError(
                f"{integrand.name}: non-finite contribution at levels "
                f"(l1={l1}, l2={m})")
        per_level.append((l1, m, contrib))
        contribs.append(contrib)
        clamp_total += clamped
        inner_evals += zpts.shape[0] * inner_ps.n
        outer_nodes += zpts.shape[0]
        l1 += 1
    value = contribs[0]
    for c in contribs[1:]:
        value = value + c
    return TensorQuadResult(value, inner_evals, outer_nodes, inner_evals,
                            tuple(per_level), clamp_total)


def literal_tensor_sum(integrand: NestedIntegrand, family1: CubatureFamily,
                       family2: CubatureFamily, pairs,
                       seed: int | None = None) -> TensorQuadResult:
    """Double sum of Delta1 o Delta2 over an explicit set of level pairs.

    Reference form for the collapsed STP identity and for completing the
    index set to a box; summation is level-major (l1, then l2).
    """
    seed1, seed2 = derive_axis_seeds(seed)
    by_l1: dict[int, list[int]] = {}
    for l1, l2 in pairs:
        by_l1.setdefault(int(l1), []).append(int(l2))
    per_level = []
    contribs = []
    clamp_total = 0
    inner_evals = 0
    outer_nodes = 0
    for l1 in sorted(by_l1):
        zpts, zw = _delta_nodes(family1, l1, seed1)
        outer_nodes += zpts.shape[0]
        for l2 in sorted(by_l1[l1]):
            hi_ps = family2.points(l2, seed2)
            hi, c_hi = _linked_values(integrand, zpts, hi_ps, l2)
            clamp_total += c_hi
            inner_evals += zpts.shape[0] * hi_ps.n
            if l2 == 1:
                dvals = hi
            else:
                lo_ps = family2.points(l2 - 1, seed2)
                lo, c_lo = _linked_values(integrand, zpts, lo_ps, l2 - 1)
                clamp_total += c_lo
                inner_evals += zpts.shape[0] * lo_ps.n
                dvals = hi - lo
            contrib = _contract(zw, dvals)
            if not np.all(np.isfinite(np.asarray(contrib))):
                raise NonFiniteContributionError(
                    f"{integrand.name}: non-finite contribution at levels "
                    f"(l1={l1}, l2={l2})")
            per_level.append((l1, l2, contrib))
            contribs.append(contrib)
    value = contribs[0]
    for c in contribs[1:]:
        value = value + c
    return TensorQuadResult(value, inner_evals, outer_nodes, inner_evals,
                            tuple(per_level), clamp_total)


def node_count(kind: str, sigma: float, level: float,
               family1: CubatureFamily, family2: CubatureFamily,
               seed: int | None = None) -> int:
    """Exact total work (inner evaluations) of the combined rule.

    For fg it is the product N1(floor(L/sigma)) * N2(floor(sigma*L));
    for sg it enumerates the per-outer-level union sizes times the
    collapsed inner sizes, matching ``stp_quadrature`` exactly.
    """
    seed1, seed2 = derive_axis_seeds(seed)
    if kind == "fg":
        l1 = 0
        while _member("fg", sigma, level, l1 + 1, 1):
            l1 += 1
        l2 = _max_inner_level("fg", sigma, level, l1)
        if l1 < 1 or l2 < 1:
            raise ValueError("fg index set empty")
        return family1.count(l1, seed1) * family2.count(l2, seed2)
    if kind != "sg":
        raise ValueError("node_count kind must be 'sg' or 'fg'")
    index_set("sg", sigma, level)
    total = 0
    l1 = 1
    while True:
        m = _max_inner_level("sg", sigma, level, l1)
        if m < 1:
            break
        total += (_delta_union_count(family1, l1, seed1)
                  * family2.count(m, seed2))
        l1 += 1
    return total
