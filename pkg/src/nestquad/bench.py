"""Benchmark the numba kernels against the pure-numpy fallback.

Run with ``python -m nestquad.bench``.  Times the three hot inner-loop
kernels on representative workloads and reports the speedup plus the
largest relative disagreement between the two implementations.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from .backends import numpy_impl


def _load_numba():
    try:
        from .backends import numba_impl
        return numba_impl
    except ImportError:
        return None


def _time(fn, *args, repeats=3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def _workloads(scale: float):
    rng = np.random.default_rng(0)
    nz = int(2048 * scale)
    nu = int(4096 * scale)
    zs = rng.random(nz)
    us = -np.log1p(-rng.random(nu))
    ws = np.full(nu, 1.0 / nu)
    yield "synthetic_inner", (zs, us, ws, 4.0)

    j, q = 3, 4
    zmats = rng.random((nz // 4, j, q))
    alts = rng.integers(0, j, nz // 4).astype(np.int64)
    umat = rng.standard_normal((nu // 4, q))
    wl = np.full(nu // 4, 4.0 / nu)
    yield "logit_inner", (zmats, alts, umat, wl)

    m = 4
    wv = rng.standard_normal((nz // 8, m))
    a = rng.standard_normal((m, m))
    chol = np.linalg.cholesky(a @ a.T + m * np.eye(m))
    upts = rng.random((nu // 4, m - 1))
    wg = np.full(nu // 4, 4.0 / nu)
    yield "genz_inner", (wv, chol, upts, wg)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="compare numba and numpy kernel backends")
    parser.add_argument("--scale", type=float, default=1.0,
                        help="workload size multiplier (default 1.0)")
    args = parser.parse_args(argv)

    numba_impl = _load_numba()
    if numba_impl is None:
        print("numba unavailable; nothing to compare")
        return 1

    print(f"{'kernel':<18} {'numpy [ms]':>12} {'numba [ms]':>12} "
          f"{'speedup':>9} {'max rel diff':>14}")
    for name, work in _workloads(args.scale):
        fn_np = getattr(numpy_impl, name)
        fn_nb = getattr(numba_impl, name)
        fn_nb(*work)  # compile outside the timing
        t_np, out_np = _time(fn_np, *work)
        t_nb, out_nb = _time(fn_nb, *work)
        denom = np.maximum(np.abs(out_np), 1e-300)
        rel = float(np.max(np.abs(out_np - out_nb) / denom))
        print(f"{name:<18} {t_np * 1e3:>12.2f} {t_nb * 1e3:>12.2f} "
              f"{t_np / t_nb:>8.1f}x {rel:>14.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
