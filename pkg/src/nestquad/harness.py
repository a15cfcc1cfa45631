"""Convergence-study driver and CLI.

Configures (model, outer family, inner family, sigma, level sweep,
seeds), runs FTP/STP studies in a worker pool, computes the successive
relative error used as the convergence measure, and writes one CSV row
per (mode, L, seed) cell.  Re-running a configuration reproduces the CSV
byte for byte (wall times excepted; ``--no-timing`` zeroes them).
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cubature import FAMILY_KINDS, Domain, make_family
from .models import (
    MixedLogitSpec,
    MixedProbitSpec,
    ProbitSpec,
    mixed_logit_ml_integrand,
    mixed_probit_integrand,
    mnp_gmm_integrand,
    outer_tangens_wrapped,
    synthetic_integrand,
    tangens_wrapped,
)
from .stp import NestedIntegrand, ftp_quadrature, sigma_plan, stp_quadrature

CSV_HEADER = "mode,L,N,value,rel_error,abs_error,clamp_count,seed,wall_ms"

# family kinds that only generate unit-cube points; unbounded model
# domains are rewritten through the tangens wrapper for these
_CUBE_ONLY = {"sobol", "halton", "frolov", "optw", "sg-cc", "sg-gengauss",
              "prod-cc"}


# ---------------------------------------------------------------------------
# model registry


@dataclass(frozen=True)
class ModelEntry:
    name: str
    description: str
    build: callable          # (params: dict, data_seed: int) -> NestedIntegrand
    params: tuple = ()       # recognized parameter keys


def _build_synthetic(params, data_seed):
    return synthetic_integrand(float(params.get("theta", 4.0)))


def _build_mixed_logit(params, data_seed):
    from .models import EquiCorrMatrix
    q = int(params.get("q", 4))
    spec = MixedLogitSpec(
        n_alternatives=int(params.get("J", 3)), taste_dim=q,
        taste_cov=EquiCorrMatrix(q, float(params.get("rho", 0.1))))
    return mixed_logit_ml_integrand(spec, data_seed)


def _build_mnp_gmm(params, data_seed):
    from .models import EquiCorrMatrix
    j = int(params.get("J", 5))
    q = int(params.get("q", 3))
    theta = np.asarray(
        [float(t) for t in str(params.get("theta", "1,1,1")).split(",")]
        if isinstance(params.get("theta", None), str)
        else params.get("theta", np.ones(q)), dtype=float)
    spec = ProbitSpec(n_alternatives=j, cov_dim=q, theta=theta,
                      error_cov=EquiCorrMatrix(j, float(params.get("rho", 0.1))))
    return mnp_gmm_integrand(spec, data_seed)


def _build_mixed_probit(params, data_seed):
    spec = MixedProbitSpec.benchmark_config()
    return mixed_probit_integrand(spec, int(params.get("alternative", 0)))


MODELS: dict[str, ModelEntry] = {
    "synthetic": ModelEntry(
        "synthetic", "log of a Gamma-integral, closed-form reference",
        _build_synthetic, ("theta",)),
    "mixed_logit": ModelEntry(
        "mixed_logit", "Mixed Logit simulated log-likelihood (J=3, q=4)",
        _build_mixed_logit, ("J", "q", "rho")),
    "mnp_gmm": ModelEntry(
        "mnp_gmm", "Multinomial Probit GMM moment via Genz (J=5, q=3)",
        _build_mnp_gmm, ("J", "q", "rho", "theta")),
    "mixed_probit": ModelEntry(
        "mixed_probit", "Mixed Probit choice probability (q=4, J=5)",
        _build_mixed_probit, ("alternative",)),
}


# ---------------------------------------------------------------------------
# study configuration and records


@dataclass(frozen=True)
class StudyConfig:
    model: str = "synthetic"
    model_params: dict = field(default_factory=dict)
    outer: str = "mc"
    inner: str = "mc"
    mode: str = "both"                  # ftp | stp | both
    sigma: float | str = "auto"
    levels: tuple[int, ...] = tuple(range(4, 11))
    seeds: tuple[int, ...] = (0,)
    out: str | None = None
    workers: int = 0                    # 0 = auto
    timing: bool = True
    smoothness: int = 2                 # r for sg/frolov/optw families

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        for kind in (self.outer, self.inner):
            if kind not in FAMILY_KINDS:
                raise ValueError(f"unknown family kind {kind!r}")
        if self.mode not in ("ftp", "stp", "both"):
            raise ValueError("mode must be ftp, stp or both")
        if not self.levels:
            raise ValueError("empty level range")
        if not self.seeds:
            raise ValueError("empty seed list")


@dataclass(frozen=True)
class ConvergenceRecord:
    mode: str
    level: int
    n: int
    value: float
    rel_error: float | None
    abs_error: float | None
    clamp_count: int
    seed: int
    wall_ms: float


@dataclass(frozen=True)
class CellFailure:
    mode: str
    level: int
    seed: int
    error: str


def resolve_sigma(config: StudyConfig) -> float:
    """Numeric sigma, with "auto" resolved through the balancing plan."""
    if config.sigma != "auto":
        return float(config.sigma)
    entry = MODELS[config.model]
    integrand = entry.build(config.model_params, int(config.seeds[0]))
    f1 = make_family(config.outer, 1, Domain.UNIT_CUBE, r=config.smoothness)
    f2 = make_family(config.inner, 1, Domain.UNIT_CUBE, r=config.smoothness)
    plan = sigma_plan(f1.rate_s, f2.rate_s, integrand.holder_alpha)
    return plan.sigma_star


def _prepare(config: StudyConfig, seed: int):
    """Build the (possibly wrapped) integrand and both families."""
    integrand = MODELS[config.model].build(config.model_params, seed)
    if config.inner in _CUBE_ONLY and integrand.inner_domain is not Domain.UNIT_CUBE:
        integrand = tangens_wrapped(integrand)
    if config.outer in _CUBE_ONLY and integrand.outer_domain is not Domain.UNIT_CUBE:
        integrand = outer_tangens_wrapped(integrand)
    fam1 = make_family(config.outer, integrand.outer_dim,
                       integrand.outer_domain, r=config.smoothness)
    fam2 = make_family(config.inner, integrand.inner_dim,
                       integrand.inner_domain, r=config.smoothness)
    return integrand, fam1, fam2


def _run_cell(config: StudyConfig, sigma: float, mode: str, level: int,
              seed: int):
    integrand, fam1, fam2 = _prepare(config, seed)
    quad = ftp_quadrature if mode == "ftp" else stp_quadrature
    t0 = time.perf_counter()
    res = quad(integrand, fam1, fam2, sigma, level, seed=seed)
    wall = (time.perf_counter() - t0) * 1e3
    return res, (wall if config.timing else 0.0), integrand.exact_value


def run_study(config: StudyConfig) -> tuple[list[ConvergenceRecord],
                                            list[CellFailure]]:
    """Run every (mode, L, seed) cell; failures don't stop the study.

    Returns records in deterministic (mode, L, seed) order.  The
    successive relative error of the smallest level uses an extra run at
    L-1 when that level is feasible.
    """
    sigma = resolve_sigma(config)
    modes = ("ftp", "stp") if config.mode == "both" else (config.mode,)
    levels = sorted(set(int(l) for l in config.levels))
    base_level = levels[0] - 1  # extra run backing rel_error at the first L
    all_levels = ([base_level] if base_level >= 1 else []) + levels
    cells = [(m, l, s) for m in modes for l in all_levels
             for s in config.seeds]

    results: dict[tuple, tuple] = {}
    failures: dict[tuple, str] = {}

    def work(cell):
        m, l, s = cell
        try:
            return cell, _run_cell(config, sigma, m, l, s), None
        except Exception as exc:  # noqa: BLE001 - cell errors are data
            return cell, None, f"{type(exc).__name__}: {exc}"

    max_workers = config.workers or min(4, os.cpu_count() or 1)
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            for cell, ok, err in pool.map(work, cells):
                if err is None:
                    results[cell] = ok
                else:
                    failures[cell] = err
    else:
        for cell in cells:
            cell, ok, err = work(cell)
            if err is None:
                results[cell] = ok
            else:
                failures[cell] = err

    records = []
    fail_list = []
    for m in modes:
        for l in levels:
            for s in config.seeds:
                cell = (m, l, s)
                if cell in failures:
                    fail_list.append(CellFailure(m, l, s, failures[cell]))
                    continue
                res, wall, exact = results[cell]
                value = res.value_norm
                rel = None
                prev_cell = (m, l - 1, s)
                if prev_cell in results and value != 0.0:
                    prev = results[prev_cell][0]
                    diff = np.asarray(res.value) - np.asarray(prev.value)
                    rel = float(np.linalg.norm(np.atleast_1d(diff)) / value)
                abs_err = None
                if exact is not None and np.ndim(res.value) == 0:
                    abs_err = abs(float(res.value) - exact)
                records.append(ConvergenceRecord(
                    m, l, res.total_work, value, rel, abs_err,
                    res.clamp_count, s, wall))
    return records, fail_list


# ---------------------------------------------------------------------------
# slope fitting


def fit_slope(records: list[ConvergenceRecord],
              work_range: tuple[float, float] | None = None,
              error_field: str = "auto") -> float:
    """Least-squares slope of log2(error) against log2(N).

    Multi-seed studies are reduced to the per-N median error first.
    Zero or missing errors are dropped; fewer than 4 surviving work
    sizes is an error.
    """
    def err_of(r: ConvergenceRecord):
        if error_field == "abs" or (error_field == "auto"
                                    and r.abs_error is not None):
            return r.abs_error
        return r.rel_error

    groups: dict[int, list[float]] = {}
    for r in records:
        if work_range is not None and not (work_range[0] <= r.n <= work_range[1]):
            continue
        e = err_of(r)
        if e is None or not math.isfinite(e) or e <= 0.0:
            continue
        groups.setdefault(r.n, []).append(e)
    if len(groups) < 4:
        raise ValueError(
            f"fit_slope needs >= 4 work sizes with positive errors, "
            f"got {len(groups)}")
    ns = sorted(groups)
    x = np.log2(np.asarray(ns, float))
    y = np.log2([float(np.median(groups[n])) for n in ns])
    a = np.vstack([x, np.ones_like(x)]).T
    return float(np.linalg.lstsq(a, y, rcond=None)[0][0])


# ---------------------------------------------------------------------------
# CSV


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.17g}"


def records_to_csv(records: list[ConvergenceRecord]) -> str:
    lines = [CSV_HEADER]
    for r in records:
        lines.append(",".join([
            r.mode, str(r.level), str(r.n), _fmt(r.value), _fmt(r.rel_error),
            _fmt(r.abs_error), str(r.clamp_count), str(r.seed),
            _fmt(r.wall_ms)]))
    return "\n".join(lines) + "\n"


def write_csv(records: list[ConvergenceRecord], path: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(records_to_csv(records))


def read_csv(path: str) -> list[ConvergenceRecord]:
    records = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header: {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            records.append(ConvergenceRecord(
                mode=parts[0], level=int(parts[1]), n=int(parts[2]),
                value=float(parts[3]),
                rel_error=float(parts[4]) if parts[4] else None,
                abs_error=float(parts[5]) if parts[5] else None,
                clamp_count=int(parts[6]), seed=int(parts[7]),
                wall_ms=float(parts[8])))
    return records


# ---------------------------------------------------------------------------
# config file + CLI


def _parse_int_list(text: str) -> tuple[int, ...]:
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..")
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(t) for t in text.split(",") if t)


def parse_config_file(path: str) -> dict:
    """Flat key=value study configuration (comments with '#')."""
    out: dict[str, str] = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"malformed config line: {raw.rstrip()}")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


_CONFIG_KEYS = ("model", "outer", "inner", "mode", "sigma", "L", "seeds",
                "out", "workers", "timing", "smoothness")


def build_config(options: dict) -> StudyConfig:
    model = options.get("model", "synthetic")
    params = {k: v for k, v in options.items()
              if k not in _CONFIG_KEYS and k in MODELS[model].params} \
        if model in MODELS else {}
    unknown = [k for k in options
               if k not in _CONFIG_KEYS and (model not in MODELS
                                             or k not in MODELS[model].params)]
    if unknown:
        raise ValueError(f"unknown config keys: {unknown}")
    sigma = options.get("sigma", "auto")
    if sigma != "auto":
        sigma = float(sigma)
    return StudyConfig(
        model=model,
        model_params=params,
        outer=options.get("outer", "mc"),
        inner=options.get("inner", "mc"),
        mode=options.get("mode", "both"),
        sigma=sigma,
        levels=_parse_int_list(str(options.get("L", "4..10"))),
        seeds=_parse_int_list(str(options.get("seeds", "0"))),
        out=options.get("out"),
        workers=int(options.get("workers", 0)),
        timing=str(options.get("timing", "on")).lower() not in
            ("off", "false", "0", "no"),
        smoothness=int(options.get("smoothness", 2)),
    )


def _print_listing() -> None:
    print("models:")
    for entry in MODELS.values():
        keys = f" (params: {', '.join(entry.params)})" if entry.params else ""
        print(f"  {entry.name:<14} {entry.description}{keys}")
    print("families (outer/inner):")
    for kind in FAMILY_KINDS:
        print(f"  {kind}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nestquad",
        description="FTP/STP convergence studies for nested integrals")
    parser.add_argument("config", nargs="?", help="key=value config file")
    parser.add_argument("--model")
    parser.add_argument("--outer")
    parser.add_argument("--inner")
    parser.add_argument("--sigma")
    parser.add_argument("--L", dest="L", help="level range, e.g. 4..12 or 4,6,8")
    parser.add_argument("--seeds", help="seed list, e.g. 0..19 or 0,1,2")
    parser.add_argument("--mode", choices=("ftp", "stp", "both"))
    parser.add_argument("--out", help="CSV output path")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--no-timing", action="store_true",
                        help="write wall_ms as 0 for reproducible output")
    parser.add_argument("--param", action="append", default=[],
                        metavar="KEY=VALUE", help="model parameter override")
    parser.add_argument("--list", action="store_true",
                        help="list available models and families")
    args = parser.parse_args(argv)

    if args.list:
        _print_listing()
        return 0

    options: dict = {}
    if args.config:
        options.update(parse_config_file(args.config))
    for flag in ("model", "outer", "inner", "sigma", "L", "seeds", "mode",
                 "out"):
        val = getattr(args, flag)
        if val is not None:
            options[flag] = val
    if args.workers is not None:
        options["workers"] = args.workers
    if args.no_timing:
        options["timing"] = "off"
    for item in args.param:
        if "=" not in item:
            parser.error(f"--param expects KEY=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        options[key.strip()] = val.strip()

    try:
        config = build_config(options)
    except ValueError as exc:
        parser.error(str(exc))

    records, failures = run_study(config)
    csv_text = records_to_csv(records)
    if config.out:
        with open(config.out, "w", newline="\n") as fh:
            fh.write(csv_text)
        print(f"wrote {len(records)} records to {config.out}")
    else:
        sys.stdout.write(csv_text)
    for f in failures:
        print(f"FAILED cell (mode={f.mode}, L={f.level}, seed={f.seed}): "
              f"{f.error}", file=sys.stderr)
    return 0 if not failures else 1


if __name__ == "__main__":
    raise SystemExit(main())
