"""Model integrand tests: covariance construction, closed-form values,
symmetry oracles and the Genz recursion."""
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gammaln

from nestquad.cubature import Domain, make_family, sobol_points
from nestquad.models import (
    EquiCorrMatrix,
    MixedLogitSpec,
    MixedProbitSpec,
    ProbitSpec,
    differenced_covariance,
    genz_factors,
    logit_kernel,
    mixed_logit_integrand,
    mixed_logit_ml_integrand,
    mixed_probit_integrand,
    ml_objective_term,
    mnp_gmm_integrand,
    mnp_probability_integrand,
    synthetic_exact_value,
    synthetic_integrand,
    tangens_wrapped,
)
from nestquad.stp import ftp_quadrature, inner_eval, stp_quadrature


class TestEquiCorr:
    def test_structure(self):
        m = EquiCorrMatrix(5, 0.1)
        np.testing.assert_allclose(np.diag(m.sigma), 1.0)
        off = m.sigma[~np.eye(5, dtype=bool)]
        np.testing.assert_allclose(off, 0.1)
        np.testing.assert_allclose(m.chol_upper.T @ m.chol_upper, m.sigma,
                                   atol=1e-12)

    def test_rho_range(self):
        with pytest.raises(ValueError):
            EquiCorrMatrix(3, 1.0)
        with pytest.raises(ValueError):
            EquiCorrMatrix(3, -0.5)
        EquiCorrMatrix(3, -0.49)  # just inside -1/(J-1)

    def test_differenced_covariance(self):
        m = EquiCorrMatrix(4, 0.3)
        for k in range(4):
            tilde = differenced_covariance(m.sigma, k)
            np.testing.assert_allclose(np.diag(tilde), 2 * (1 - 0.3))
            evals = np.linalg.eigvalsh(tilde)
            assert evals.min() > 0


class TestSynthetic:
    def test_exact_value_against_quad_oracle(self):
        # independent oracle: adaptive quadrature of log Gamma(z + theta)
        for theta in (1.5, 4.0, 7.0):
            oracle, err = quad(lambda z: gammaln(z + theta), 0.0, 1.0,
                               epsabs=1e-13)
            np.testing.assert_allclose(synthetic_exact_value(theta), oracle,
                                       atol=max(1e-12, 10 * err))

    def test_spec_reference_window(self):
        # the quoted 2.4641167 is within 1e-6 of the closed form
        assert abs(synthetic_exact_value(4.0) - 2.4641167) <= 1e-6

    def test_inner_gamma_values(self):
        syn = synthetic_integrand(4.0)
        glag = make_family("sg-gauss", 1, Domain.LAGUERRE)
        np.testing.assert_allclose(
            inner_eval(syn, glag, np.array([0.0]), 2), 6.0, rtol=1e-12)
        syn1 = synthetic_integrand(1.0)
        np.testing.assert_allclose(
            inner_eval(syn1, glag, np.array([1.0]), 2), 1.0, rtol=1e-12)

    def test_rejects_bad_theta(self):
        with pytest.raises(ValueError):
            synthetic_integrand(0.0)

    def test_phi_point_matches_batch(self):
        syn = synthetic_integrand(4.0)
        z = np.array([0.3])
        u = np.array([[1.7]])
        w = np.array([1.0])
        np.testing.assert_allclose(syn.inner_batch(z[None, :], u, w)[0],
                                   syn.phi_point(z, u[0]), rtol=1e-14)


class TestLogitKernel:
    def test_uniform_at_zero(self):
        z = np.zeros((3, 4))
        assert logit_kernel(z, np.ones(4), 1) == pytest.approx(1 / 3)

    def test_direct_value(self):
        # utilities (1,0,0): P_0 = e/(e+2)
        z = np.array([[1.0], [0.0], [0.0]])
        got = logit_kernel(z, np.array([1.0]), 0)
        np.testing.assert_allclose(got, math.e / (math.e + 2), rtol=1e-12)
        np.testing.assert_allclose(got, 0.5761169, rtol=1e-6)

    def test_normalization(self):
        rng = np.random.default_rng(8)
        z = rng.standard_normal((5, 3))
        u = rng.standard_normal(3)
        total = sum(logit_kernel(z, u, i) for i in range(5))
        np.testing.assert_allclose(total, 1.0, atol=1e-15)


class TestMixedLogit:
    def test_zero_covariates_give_uniform(self):
        spec = MixedLogitSpec()
        integrand = mixed_logit_integrand(spec, 0)
        fam = make_family("sg-gauss", 4, Domain.GAUSSIAN)
        val = inner_eval(integrand, fam, np.zeros(12), 3)
        np.testing.assert_allclose(val, 1 / 3, atol=1e-12)

    def test_point_mass_limit(self):
        # shrinking the mixing law recovers the plain logit kernel at u0
        u0 = np.array([0.3, -0.2, 0.5, 0.1])
        spec = MixedLogitSpec(mean_taste=u0, taste_scale=1e-8)
        integrand = mixed_logit_integrand(spec, 1)
        fam = make_family("sg-gauss", 4, Domain.GAUSSIAN)
        rng = np.random.default_rng(3)
        z = rng.random(12)
        val = inner_eval(integrand, fam, z, 3)
        want = logit_kernel(z.reshape(3, 4), u0, 1)
        np.testing.assert_allclose(val, want, rtol=1e-7)

    def test_relabeling_invariance(self):
        # swapping alternatives i<->j together with the rows of z leaves
        # the inner integral unchanged (deterministic rule, exact)
        spec = MixedLogitSpec()
        fam = make_family("sg-gauss", 4, Domain.GAUSSIAN)
        rng = np.random.default_rng(4)
        z = rng.random((3, 4))
        a = inner_eval(mixed_logit_integrand(spec, 0), fam, z.ravel(), 3)
        z_swapped = z[[1, 0, 2]]
        b = inner_eval(mixed_logit_integrand(spec, 1), fam,
                       z_swapped.ravel(), 3)
        assert a == b

    def test_ml_choices_are_pure_in_z(self):
        spec = MixedLogitSpec()
        integrand = mixed_logit_ml_integrand(spec, data_seed=5)
        fam = make_family("sg-gauss", 4, Domain.GAUSSIAN)
        z = np.full(12, 0.25)
        a = inner_eval(integrand, fam, z, 3)
        b = inner_eval(integrand, fam, z, 3)
        assert a == b

    def test_ml_objective_term_trivials(self):
        # P = 1 for the chosen alternative -> 0; P = 1/2 -> log(1/2)
        const = mixed_logit_ml_integrand(MixedLogitSpec(), 0)
        fam = make_family("sg-gauss", 4, Domain.GAUSSIAN)
        z = np.zeros(12)  # symmetric covariates: P = 1/3 for any choice
        got = ml_objective_term(const, fam, z, 3)
        np.testing.assert_allclose(got, math.log(1 / 3), atol=1e-12)


class TestGenz:
    def test_binary_probit_single_factor(self):
        # J = 2 would give a single CDF factor; emulate with a 1-factor
        # recursion on a hand-built spec
        spec = ProbitSpec(n_alternatives=3, cov_dim=2,
                          theta=np.array([0.5, 0.5]),
                          error_cov=EquiCorrMatrix(3, 0.0))
        chol = spec.chol_diff[0]
        # the first factor of the recursion is Phi(w1 / chol11)
        from nestquad.models import _genz_reference
        w = np.array([0.8, 0.0])
        u = np.array([0.5])
        got = _genz_reference(chol[:1, :1], w[:1], u[:0])
        from nestquad.rules1d import normal_cdf
        np.testing.assert_allclose(got, normal_cdf(0.8 / chol[0, 0]),
                                   rtol=1e-14)

    def test_three_way_tie(self):
        # symmetric zero utilities: P = 1/3
        spec = ProbitSpec(n_alternatives=3, cov_dim=2, theta=np.zeros(2),
                          error_cov=EquiCorrMatrix(3, 0.0))
        ps = sobol_points(1, 14)
        vals = [genz_factors(spec, np.zeros(2), u) * w
                for u, w in zip(ps.points, ps.weights)]
        np.testing.assert_allclose(sum(vals), 1 / 3, atol=1e-4)

    def test_orthant_closed_form(self):
        # differenced bivariate with correlation 1/2 at w = 0:
        # P = 1/4 + arcsin(1/2)/(2 pi) = 1/3
        want = 0.25 + math.asin(0.5) / (2 * math.pi)
        np.testing.assert_allclose(want, 1 / 3, rtol=1e-15)

    def test_output_in_unit_interval(self):
        spec = ProbitSpec()
        rng = np.random.default_rng(6)
        for _ in range(50):
            w = rng.standard_normal(4) * 2
            u = rng.random(3)
            val = genz_factors(spec, w, u)
            assert 0.0 < val <= 1.0

    def test_monotone_in_utilities(self):
        spec = ProbitSpec()
        rng = np.random.default_rng(7)
        u = rng.random(3)
        w = rng.standard_normal(4)
        base = genz_factors(spec, w, u)
        for i in range(4):
            bumped = w.copy()
            bumped[i] += 0.5
            assert genz_factors(spec, bumped, u) >= base

    def test_probabilities_sum_to_one(self):
        # J=3 case at a fixed z, high inner level
        spec = ProbitSpec(n_alternatives=3, cov_dim=2,
                          theta=np.array([1.0, 0.5]),
                          error_cov=EquiCorrMatrix(3, 0.1))
        fam = make_family("sobol", 1)
        rng = np.random.default_rng(12)
        z = rng.random(6)
        total = sum(
            inner_eval(mnp_probability_integrand(spec, alt), fam, z, 12)
            for alt in range(3))
        np.testing.assert_allclose(total, 1.0, atol=1e-3)


class TestMnpGmm:
    def test_two_alternative_hand_example(self):
        # y = (1,0), P = (1/2,1/2), grad P1 = g  ->  m = 2 g, from the
        # moment formula m = (y_k/P_k) grad P_k with the zero-sum identity
        g = np.array([0.3, -0.1])
        h = 1e-4
        spec = ProbitSpec(n_alternatives=3, cov_dim=2,
                          theta=np.array([1.0, 1.0]))
        integrand = mnp_gmm_integrand(spec, data_seed=0, fd_step=h)
        t = np.array([[0.5,
                       0.5 + h * g[0], 0.5 - h * g[0],
                       0.5 + h * g[1], 0.5 - h * g[1]]])
        m = integrand.link_batch(np.zeros((1, 6)), t)
        np.testing.assert_allclose(m[0], 2 * g, rtol=1e-9)

    def test_estimating_equation_identity(self):
        # at a symmetric node every alternative has P = 1/J and the
        # y-average of the moment is sum_k grad P_k / J P_k ~ 0
        spec = ProbitSpec(n_alternatives=3, cov_dim=2,
                          theta=np.array([1.0, 1.0]),
                          error_cov=EquiCorrMatrix(3, 0.1))
        z = np.tile(np.array([0.4, 0.6]), (3, 1))  # equal utilities
        fam = make_family("sobol", 1)
        h = 1e-4
        total = np.zeros(2)
        ps = fam.points(12)
        from nestquad import backends
        for k in range(3):
            variants = [spec.theta]
            for c in range(2):
                e = np.zeros(2)
                e[c] = h
                variants.extend([spec.theta + e, spec.theta - e])
            vals = []
            for th in variants:
                v = z @ th
                w = np.array([v[k] - v[i] for i in range(3) if i != k])
                vals.append(backends.genz_inner(
                    w[None, :], spec.chol_diff[k], ps.points, ps.weights)[0])
            p = vals[0]
            grad = np.array([(vals[1] - vals[2]) / (2 * h),
                             (vals[3] - vals[4]) / (2 * h)])
            total += (1 / 3) * grad / p
        np.testing.assert_allclose(total, 0.0, atol=1e-6)

    def test_vector_moment_shape_and_determinism(self):
        spec = ProbitSpec()
        integrand = mnp_gmm_integrand(spec, data_seed=1)
        fam2 = make_family("sobol", 3)
        res1 = ftp_quadrature(integrand, make_family("mc", 15), fam2,
                              1.0, 4, seed=3)
        res2 = ftp_quadrature(integrand, make_family("mc", 15), fam2,
                              1.0, 4, seed=3)
        assert np.asarray(res1.value).shape == (3,)
        np.testing.assert_array_equal(np.asarray(res1.value),
                                      np.asarray(res2.value))


class TestMixedProbit:
    def test_point_mass_limit_reduces_to_mnp(self):
        spec = MixedProbitSpec.benchmark_config()
        tiny = MixedProbitSpec(covariates=spec.covariates,
                               error_cov=spec.error_cov,
                               mixing_mean=spec.mixing_mean,
                               mixing_cov=spec.mixing_cov,
                               mixing_scale=1e-9)
        integrand = mixed_probit_integrand(tiny, 0)
        fam1 = make_family("sg-gauss", 4, Domain.GAUSSIAN)
        fam2 = make_family("sobol", 3)
        res = ftp_quadrature(integrand, fam1, fam2, 1.0, 6)
        # plain MNP probability at theta0, same inner rule (isolates the
        # point-mass reduction from inner quadrature error)
        from nestquad import backends
        v = spec.mixing_mean @ spec.covariates.T
        w = np.array([v[0] - v[i] for i in range(1, 5)])
        tilde = differenced_covariance(spec.error_cov.sigma, 0)
        chol = np.linalg.cholesky(tilde)
        ps = sobol_points(3, 6)
        want = backends.genz_inner(w[None, :], chol, ps.points,
                                   ps.weights)[0]
        np.testing.assert_allclose(res.value, want, rtol=1e-7)

    def test_probability_in_unit_interval(self):
        spec = MixedProbitSpec.benchmark_config()
        integrand = mixed_probit_integrand(spec, 0)
        fam1 = make_family("sg-gauss", 4, Domain.GAUSSIAN)
        fam2 = make_family("sobol", 3)
        for level in (2, 4, 6):
            res = ftp_quadrature(integrand, fam1, fam2, 1.0, level)
            assert 0.0 < res.value < 1.0

    # frozen output of a 1e5 x 1e4 nested Monte Carlo run of the raw
    # model definition (argmax indicator of utilities), Philox seed 2024;
    # set NESTQUAD_RUN_SLOW_ORACLES=1 to recompute live (minutes)
    ORACLE_VALUE = 0.15507018
    ORACLE_SE = 4.12e-4

    def _nested_mc_oracle(self, spec, alt):
        z = spec.covariates
        l_eps = spec.error_cov.chol_lower
        l_xi = spec.mixing_cov.chol_lower
        m_out, m_in = 10 ** 5, 10 ** 4
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(2024)))
        phat = np.empty(m_out)
        chunk = 200
        for lo in range(0, m_out, chunk):
            hi = min(lo + chunk, m_out)
            thetas = (spec.mixing_mean[None, :]
                      + rng.standard_normal((hi - lo, 4)) @ l_xi.T)
            v = thetas @ z.T
            eps = rng.standard_normal((hi - lo, m_in, 5)) @ l_eps.T
            choice = np.argmax(v[:, None, :] + eps, axis=2)
            phat[lo:hi] = (choice == alt).mean(axis=1)
        return float(phat.mean()), float(phat.std(ddof=1) / math.sqrt(m_out))

    def test_benchmark_config_against_nested_mc_oracle(self):
        import os
        spec = MixedProbitSpec.benchmark_config()
        value, se = self.ORACLE_VALUE, self.ORACLE_SE
        if os.environ.get("NESTQUAD_RUN_SLOW_ORACLES"):
            value, se = self._nested_mc_oracle(spec, 0)
        integrand = mixed_probit_integrand(spec, 0)
        fam1 = make_family("sg-gauss", 4, Domain.GAUSSIAN)
        fam2 = make_family("sobol", 3)
        res = ftp_quadrature(integrand, fam1, fam2, 1.0, 7)
        assert abs(res.value - value) <= 3 * se


class TestTangensWrapper:
    def test_preserves_value_laguerre(self):
        syn = synthetic_integrand(4.0)
        wrapped = tangens_wrapped(syn)
        assert wrapped.inner_domain is Domain.UNIT_CUBE
        fam = make_family("sobol", 1)
        val = inner_eval(wrapped, fam, np.array([0.0]), 12)
        np.testing.assert_allclose(val, 6.0, rtol=1e-9)

    def test_preserves_value_gaussian(self):
        spec = MixedLogitSpec()
        base = mixed_logit_integrand(spec, 0)
        wrapped = tangens_wrapped(base)
        rng = np.random.default_rng(2)
        z = rng.random(12)
        fam_cube = make_family("sobol", 4)
        fam_gauss = make_family("sg-gauss", 4, Domain.GAUSSIAN)
        # 4-D QMC at 2^14 points still carries ~1e-4 error; the
        # Gauss-Hermite grid value is converged to ~1e-9 by level 5
        a = inner_eval(wrapped, fam_cube, z, 14)
        b = inner_eval(base, fam_gauss, z, 5)
        np.testing.assert_allclose(a, b, atol=5e-4)

    def test_unit_cube_passthrough(self):
        spec = ProbitSpec()
        integrand = mnp_probability_integrand(spec, 0)
        assert tangens_wrapped(integrand) is integrand
