"""Acceptance suite: one test per criterion, printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines as they complete.  Slope windows are checked on frozen seed lists,
so reruns reproduce the same numbers exactly.
"""
import contextlib
import math
import time

import numpy as np
import pytest

from nestquad import backends
from nestquad.cubature import Domain, make_family, optimal_weights, sobol_points
from nestquad.harness import StudyConfig, fit_slope, main, run_study
from nestquad.models import (
    EquiCorrMatrix,
    MixedLogitSpec,
    ProbitSpec,
    mixed_logit_integrand,
    synthetic_integrand,
    tangens_wrapped,
)
from nestquad.stp import (
    delta2,
    ftp_quadrature,
    index_set,
    inner_eval,
    literal_tensor_sum,
    sigma_plan,
    stp_quadrature,
    node_count,
)


@contextlib.contextmanager
def criterion(number: int, name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number} {name}: FAIL")
        raise
    print(f"ACCEPTANCE {number} {name}: PASS")


def _slope_for_levels(records, mode, levels):
    picked = [r for r in records if r.mode == mode and r.level in levels]
    return fit_slope(picked)


def test_criterion_1_synthetic_exactness():
    with criterion(1, "synthetic exactness"):
        t0 = time.perf_counter()
        syn = synthetic_integrand(4.0)
        f1 = make_family("sg-gauss", 1, Domain.UNIT_CUBE)
        f2 = make_family("sg-gauss", 1, Domain.LAGUERRE)
        best = min(abs(stp_quadrature(syn, f1, f2, 1.0, level).value
                       - 2.4641167)
                   for level in range(4, 13))
        elapsed = time.perf_counter() - t0
        assert best <= 1e-6, best
        assert elapsed < 10.0, elapsed


def test_criterion_2_mc_rate_doubling():
    with criterion(2, "rate doubling, MC x MC"):
        t0 = time.perf_counter()
        stp_cfg = StudyConfig(model="synthetic", outer="mc", inner="mc",
                              sigma=1.0, mode="stp",
                              levels=tuple(range(4, 16)),
                              seeds=tuple(range(200)), timing=False)
        ftp_cfg = StudyConfig(model="synthetic", outer="mc", inner="mc",
                              sigma=1.0, mode="ftp",
                              levels=tuple(range(4, 12)),
                              seeds=tuple(range(32)), timing=False)
        stp_records, stp_fail = run_study(stp_cfg)
        ftp_records, ftp_fail = run_study(ftp_cfg)
        assert not stp_fail and not ftp_fail
        slope_stp = _slope_for_levels(stp_records, "stp", range(10, 16))
        slope_ftp = _slope_for_levels(ftp_records, "ftp", range(6, 12))
        elapsed = time.perf_counter() - t0
        assert -0.35 <= slope_ftp <= -0.15, slope_ftp
        assert -0.65 <= slope_stp <= -0.40, slope_stp
        assert elapsed < 120.0, elapsed


def test_criterion_3_qmc_rate_doubling():
    with criterion(3, "rate doubling, Sobol x Sobol"):
        t0 = time.perf_counter()
        cfg_stp = StudyConfig(model="synthetic", outer="sobol", inner="sobol",
                              sigma=1.0, mode="stp",
                              levels=tuple(range(4, 17)), seeds=(0,),
                              timing=False)
        cfg_ftp = StudyConfig(model="synthetic", outer="sobol", inner="sobol",
                              sigma=1.0, mode="ftp",
                              levels=tuple(range(4, 12)), seeds=(0,),
                              timing=False)
        stp_records, f1 = run_study(cfg_stp)
        ftp_records, f2 = run_study(cfg_ftp)
        assert not f1 and not f2
        slope_stp = _slope_for_levels(stp_records, "stp", range(11, 17))
        slope_ftp = _slope_for_levels(ftp_records, "ftp", range(6, 12))
        elapsed = time.perf_counter() - t0
        assert -0.65 <= slope_ftp <= -0.40, slope_ftp
        assert -1.20 <= slope_stp <= -0.80, slope_stp
        assert elapsed < 60.0, elapsed


def test_criterion_4_telescoping_identities():
    with criterion(4, "telescoping and collapse identities"):
        syn = synthetic_integrand(4.0)
        f1 = make_family("sg-gauss", 1, Domain.UNIT_CUBE)
        f2 = make_family("sg-gauss", 1, Domain.LAGUERRE)
        # (a) inner difference terms telescope to the top-level value
        z = np.array([0.6])
        total = sum(delta2(syn, f2, z, l2) for l2 in range(1, 9))
        top = math.log(inner_eval(syn, f2, z, 8))
        assert abs(total - top) <= 1e-12
        # (b) STP over the completed box equals FTP
        level = 4
        box = [(a, b) for a in range(1, level + 1)
               for b in range(1, level + 1)]
        lit_box = literal_tensor_sum(syn, f1, f2, box)
        ftp = ftp_quadrature(syn, f1, f2, 1.0, level)
        assert abs(lit_box.value - ftp.value) <= 1e-12
        # (c) collapsed per-outer-level STP equals the literal double sum
        col = stp_quadrature(syn, f1, f2, 1.0, 6)
        lit = literal_tensor_sum(syn, f1, f2, index_set("sg", 1.0, 6).pairs)
        assert abs(col.value - lit.value) <= 1e-12


def test_criterion_5_sigma_plan_closed_forms():
    with criterion(5, "sigma plan closed forms"):
        rng = np.random.default_rng(99)
        for _ in range(1000):
            s1, s2, alpha = rng.uniform(0.05, 10, 3)
            p = sigma_plan(s1, s2, alpha)
            assert abs(p.sigma_star - math.sqrt(s1 / (alpha * s2))) <= 1e-12
            assert abs(p.gamma_ftp
                       - alpha * s1 * s2 / (s1 + alpha * s2)) <= 1e-12
            assert abs(p.gamma_stp - min(s1, alpha * s2)) <= 1e-12
            assert p.gamma_stp >= p.gamma_ftp - 1e-12
            c = rng.uniform(0.05, 20)
            assert abs(sigma_plan(c * s1, c * s2, alpha).sigma_star
                       - p.sigma_star) <= 1e-12


def test_criterion_6_genz_correctness():
    with criterion(6, "Genz correctness"):
        # (a) symmetric three-way tie
        spec3 = ProbitSpec(n_alternatives=3, cov_dim=2, theta=np.zeros(2),
                           error_cov=EquiCorrMatrix(3, 0.0))
        ps = sobol_points(1, 14)
        val = backends.genz_inner(np.zeros((1, 2)), spec3.chol_diff[0],
                                  ps.points, ps.weights)[0]
        assert abs(val - 1 / 3) <= 1e-4, val
        # (b) orthant closed form for the differenced corr-1/2 case
        orthant = 0.25 + math.asin(0.5) / (2 * math.pi)
        assert abs(val - orthant) <= 1e-4
        # (c) benchmark-configured probability vs 1e7-draw rejection oracle
        spec = ProbitSpec()
        rng_z = np.random.Generator(np.random.Philox(np.random.SeedSequence(123)))
        z = rng_z.random((5, 3))
        v = z @ spec.theta
        w = np.array([v[0] - v[i] for i in range(1, 5)])
        ps3 = sobol_points(3, 14)
        quad = backends.genz_inner(w[None, :], spec.chol_diff[0],
                                   ps3.points, ps3.weights)[0]
        l_eps = spec.error_cov.chol_lower
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(77)))
        hits = 0
        n_draws = 10 ** 7
        for _ in range(10):
            eps = rng.standard_normal((n_draws // 10, 5)) @ l_eps.T
            hits += int((np.argmax(v[None, :] + eps, axis=1) == 0).sum())
        p_oracle = hits / n_draws
        se = math.sqrt(p_oracle * (1 - p_oracle) / n_draws)
        assert abs(quad - p_oracle) <= 3 * se, (quad, p_oracle, se)


def test_criterion_7_mixed_logit_oracles():
    with criterion(7, "Mixed Logit oracles"):
        spec = MixedLogitSpec()
        integrand = mixed_logit_integrand(spec, 0)
        gh = make_family("sg-gauss", 4, Domain.GAUSSIAN)
        # z = 0 forces the uniform choice probability
        val0 = inner_eval(integrand, gh, np.zeros(12), 6)
        assert abs(val0 - 1 / 3) <= 1e-6
        # benchmark configuration vs 1e7-sample MC oracle at a fixed z
        rng_z = np.random.Generator(np.random.Philox(np.random.SeedSequence(0)))
        z = rng_z.random(12)
        quad = inner_eval(integrand, gh, z, 6)
        zm = z.reshape(3, 4)
        lch = spec.chol_scaled
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(5)))
        acc = acc2 = 0.0
        n_draws = 10 ** 7
        for _ in range(10):
            u = rng.standard_normal((n_draws // 10, 4)) @ lch.T
            vv = u @ zm.T
            vv -= vv.max(axis=1, keepdims=True)
            e = np.exp(vv)
            p = e[:, 0] / e.sum(axis=1)
            acc += p.sum()
            acc2 += (p * p).sum()
        mean = acc / n_draws
        se = math.sqrt(max(acc2 / n_draws - mean * mean, 0.0) / n_draws)
        assert abs(quad - mean) <= 3 * se, (quad, mean, se)


def test_criterion_8_optimal_weights_contract():
    with criterion(8, "optimal weights contract"):
        # kernel residual on 256 random nodes, d = 1 and 2, r = 1
        for d in (1, 2):
            rng = np.random.default_rng(5 + d)
            pts = rng.random((256, d))
            ps = optimal_weights(pts, r=1)
            k_mat = np.ones((256, 256))
            b = np.ones(256)
            for kk in range(d):
                c = pts[:, kk]
                k_mat *= 1 + np.minimum(c[:, None], c[None, :])
                b *= 1 + c - c ** 2 / 2
            assert np.abs(k_mat @ ps.weights - b).max() <= 1e-10
        # slope battle on a smooth 1-D integrand at the same nodes
        exact = 1.0 / 3
        sizes = [2 ** k for k in range(4, 11)]
        med_opt, med_mc = [], []
        for n in sizes:
            eo, em = [], []
            for s in range(20):
                rng = np.random.default_rng(1000 + s)
                pts = rng.random((n, 1))
                w = optimal_weights(pts, r=1).weights
                f = pts[:, 0] ** 2
                eo.append(abs(float(w @ f) - exact))
                em.append(abs(float(f.mean()) - exact))
            med_opt.append(np.median(eo))
            med_mc.append(np.median(em))
        x = np.log2(np.asarray(sizes, float))
        fit = lambda y: float(np.linalg.lstsq(
            np.vstack([x, np.ones_like(x)]).T, np.log2(y), rcond=None)[0][0])
        slope_opt, slope_mc = fit(med_opt), fit(med_mc)
        assert slope_opt <= -0.9, slope_opt
        assert slope_mc >= -0.7, slope_mc


def test_criterion_9_node_count_theorem():
    with criterion(9, "node count theorem"):
        f1 = make_family("mc", 1)
        f2 = make_family("sobol", 1)
        for sigma in (0.5, 1.0, 2.0):
            ratios = []
            for level in range(6, 15):
                n_sg = node_count("sg", sigma, level, f1, f2, seed=0)
                ratios.append(n_sg / 2 ** (max(sigma, 1 / sigma) * level))
                n_fg = node_count("fg", sigma, level, f1, f2, seed=0)
                l1 = int(math.floor(level / sigma + 1e-12))
                l2 = int(math.floor(sigma * level + 1e-12))
                assert n_fg == 2 ** l1 * 2 ** l2, (sigma, level)
            assert max(ratios) / min(ratios) < 100, sigma


def test_criterion_10_determinism(tmp_path):
    with criterion(10, "byte-identical CSV"):
        args = ["--model", "synthetic", "--outer", "mc", "--inner", "mc",
                "--sigma", "1", "--L", "4..8", "--seeds", "0..7",
                "--mode", "both", "--workers", "4", "--no-timing"]
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        assert main([*args, "--out", str(out1)]) == 0
        assert main([*args, "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
