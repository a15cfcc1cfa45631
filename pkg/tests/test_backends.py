"""Agreement between the numba kernels and the numpy fallback."""
import numpy as np
import pytest

from nestquad.backends import numpy_impl

numba_impl = pytest.importorskip("nestquad.backends.numba_impl")


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(202)


def test_active_backend_reports():
    from nestquad.backends import active_backend
    assert active_backend() in ("numba", "numpy")


def test_norm_cdf_agreement(rng):
    x = rng.uniform(-10, 10, 20000)
    np.testing.assert_allclose(numba_impl.norm_cdf(x), numpy_impl.norm_cdf(x),
                               atol=1e-15)


def test_norm_icdf_agreement(rng):
    p = rng.uniform(1e-14, 1 - 1e-14, 20000)
    a, b = numba_impl.norm_icdf(p), numpy_impl.norm_icdf(p)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-14)


def test_synthetic_inner_agreement(rng):
    zs = rng.random(300)
    us = -np.log1p(-rng.random(500))
    ws = rng.random(500)
    ws /= ws.sum()
    a = numba_impl.synthetic_inner(zs, us, ws, 4.0)
    b = numpy_impl.synthetic_inner(zs, us, ws, 4.0)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_logit_inner_agreement(rng):
    nz, j, q, nu = 150, 3, 4, 400
    zmats = rng.random((nz, j, q))
    alts = rng.integers(0, j, nz).astype(np.int64)
    umat = rng.standard_normal((nu, q))
    ws = np.full(nu, 1.0 / nu)
    a = numba_impl.logit_inner(zmats, alts, umat, ws)
    b = numpy_impl.logit_inner(zmats, alts, umat, ws)
    np.testing.assert_allclose(a, b, rtol=1e-12)
    assert np.all((a > 0) & (a < 1))


def test_genz_inner_agreement(rng):
    nw, m, nu = 60, 4, 512
    wv = rng.standard_normal((nw, m)) * 1.5
    mat = rng.standard_normal((m, m))
    chol = np.linalg.cholesky(mat @ mat.T + m * np.eye(m))
    upts = rng.random((nu, m - 1))
    ws = np.full(nu, 1.0 / nu)
    a = numba_impl.genz_inner(wv, chol, upts, ws)
    b = numpy_impl.genz_inner(wv, chol, upts, ws)
    np.testing.assert_allclose(a, b, rtol=1e-11)
    assert np.all((a > 0) & (a <= 1))


def test_kernels_deterministic(rng):
    zs = rng.random(64)
    us = -np.log1p(-rng.random(64))
    ws = np.full(64, 1.0 / 64)
    a = numba_impl.synthetic_inner(zs, us, ws, 4.0)
    b = numba_impl.synthetic_inner(zs, us, ws, 4.0)
    np.testing.assert_array_equal(a, b)
