"""Harness tests: configuration, study runs, CSV round trips, slope
fitting and CLI behavior."""
import math

import numpy as np
import pytest

from nestquad.harness import (
    CSV_HEADER,
    ConvergenceRecord,
    StudyConfig,
    build_config,
    fit_slope,
    main,
    parse_config_file,
    read_csv,
    records_to_csv,
    resolve_sigma,
    run_study,
    write_csv,
)


def small_config(**kw):
    base = dict(model="synthetic", outer="mc", inner="mc", sigma=1.0,
                levels=(4, 5, 6), seeds=(0, 1), mode="both", timing=False)
    base.update(kw)
    return StudyConfig(**base)


class TestConfig:
    def test_parse_config_file(self, tmp_path):
        path = tmp_path / "study.cfg"
        path.write_text(
            "# synthetic baseline\n"
            "model = synthetic\n"
            "outer=mc\n"
            "inner = mc   # native exponential draws\n"
            "L = 4..6\n"
            "seeds = 0,1,2\n"
            "sigma = 1\n"
            "theta = 4.0\n")
        cfg = build_config(parse_config_file(path))
        assert cfg.model == "synthetic"
        assert cfg.levels == (4, 5, 6)
        assert cfg.seeds == (0, 1, 2)
        assert cfg.model_params == {"theta": "4.0"}

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValueError):
            build_config({"model": "synthetic", "bogus": "1"})

    def test_bad_values_rejected(self):
        with pytest.raises(ValueError):
            StudyConfig(model="nope")
        with pytest.raises(ValueError):
            StudyConfig(outer="nope")
        with pytest.raises(ValueError):
            StudyConfig(levels=())
        with pytest.raises(ValueError):
            StudyConfig(mode="sideways")

    def test_sigma_auto_uses_plan(self):
        cfg = small_config(sigma="auto", outer="sobol", inner="mc")
        # s1 = 1, s2 = 1/2, alpha = 1 -> sigma* = sqrt(2)
        np.testing.assert_allclose(resolve_sigma(cfg), math.sqrt(2.0))


class TestRunStudy:
    def test_record_cardinality(self):
        records, failures = run_study(small_config(levels=(4,), seeds=(0, 1, 2)))
        assert not failures
        assert len(records) == 2 * 3  # both modes x 3 seeds

    def test_deterministic_order_and_fields(self):
        records, _ = run_study(small_config())
        keys = [(r.mode, r.level, r.seed) for r in records]
        assert keys == sorted(keys)
        for r in records:
            assert r.n > 0
            assert r.abs_error is not None  # synthetic has a reference
            assert r.rel_error is not None  # base level L-1 always feasible
            assert r.wall_ms == 0.0

    def test_work_strictly_increasing_in_level(self):
        records, _ = run_study(small_config(seeds=(0,)))
        for mode in ("ftp", "stp"):
            ns = [r.n for r in records if r.mode == mode]
            assert all(a < b for a, b in zip(ns, ns[1:]))

    def test_rel_error_decreases_deterministic(self):
        # soft monotonicity: allow one plateau at machine precision
        cfg = small_config(outer="sg-gauss", inner="sg-gauss",
                           levels=tuple(range(6, 10)), seeds=(0,),
                           mode="stp")
        records, failures = run_study(cfg)
        assert not failures
        rels = [r.rel_error for r in records]
        violations = sum(1 for a, b in zip(rels, rels[1:])
                         if b > a and b > 1e-14)
        assert violations <= 1, rels

    def test_failures_attached_and_study_continues(self):
        # optimal-weights families stop at level 12: level 13 cells fail
        cfg = small_config(outer="optw", inner="sobol",
                           levels=(4, 13), seeds=(0,), mode="ftp")
        records, failures = run_study(cfg)
        assert len(records) == 1 and records[0].level == 4
        assert len(failures) == 1 and failures[0].level == 13

    def test_vector_model_records_norm(self):
        cfg = small_config(model="mnp_gmm", outer="mc", inner="sobol",
                           levels=(3,), seeds=(0,), mode="ftp")
        records, failures = run_study(cfg)
        assert not failures
        assert records[0].value >= 0.0
        assert records[0].abs_error is None  # no scalar reference

    @pytest.mark.parametrize("model,outer,inner", [
        ("mixed_logit", "mc", "sobol"),     # inner tangens wrap (gaussian)
        ("mixed_logit", "mc", "sg-gauss"),  # native gaussian inner
        ("mixed_probit", "sobol", "sobol"),  # outer tangens wrap (gaussian)
        ("mixed_probit", "sg-gauss", "sobol"),
        ("mnp_gmm", "sobol", "sg-gengauss"),
    ])
    def test_model_family_combinations_run(self, model, outer, inner):
        cfg = small_config(model=model, outer=outer, inner=inner,
                           levels=(3,), seeds=(0,), mode="both")
        records, failures = run_study(cfg)
        assert not failures
        assert len(records) == 2
        for r in records:
            assert math.isfinite(r.value)
            if model == "mixed_probit":
                assert 0.0 < r.value < 1.0


class TestCsv:
    def test_header_exact(self):
        assert CSV_HEADER == "mode,L,N,value,rel_error,abs_error,clamp_count,seed,wall_ms"

    def test_round_trip_identical(self, tmp_path):
        records, _ = run_study(small_config())
        path = tmp_path / "out.csv"
        write_csv(records, path)
        back = read_csv(path)
        assert back == records

    def test_missing_fields_written_empty(self, tmp_path):
        rec = ConvergenceRecord("ftp", 4, 100, 1.0, None, None, 0, 7, 0.0)
        text = records_to_csv([rec])
        assert ",,," in text  # rel_error and abs_error both empty
        path = tmp_path / "one.csv"
        path.write_text(text)
        assert read_csv(path) == [rec]

    def test_rerun_byte_identical(self):
        cfg = small_config(workers=4)
        a, _ = run_study(cfg)
        b, _ = run_study(cfg)
        assert records_to_csv(a) == records_to_csv(b)


class TestFitSlope:
    @staticmethod
    def make_records(ns, errs, seeds=(0,)):
        out = []
        for n, e in zip(ns, errs):
            for s in seeds:
                out.append(ConvergenceRecord("stp", 0, n, 1.0, None,
                                             e, 0, s, 0.0))
        return out

    def test_exact_half_slope(self):
        ns = [2 ** k for k in range(4, 12)]
        recs = self.make_records(ns, [n ** -0.5 for n in ns])
        np.testing.assert_allclose(fit_slope(recs), -0.5, atol=1e-12)

    def test_noisy_unit_slope(self):
        rng = np.random.default_rng(17)
        ns = [2 ** k for k in range(4, 12)]
        errs = [n ** -1.0 * rng.uniform(0.9, 1.1) for n in ns]
        slope = fit_slope(self.make_records(ns, errs))
        assert -1.1 <= slope <= -0.9

    def test_constant_error_zero_slope(self):
        ns = [2 ** k for k in range(4, 10)]
        recs = self.make_records(ns, [0.25] * len(ns))
        np.testing.assert_allclose(fit_slope(recs), 0.0, atol=1e-12)

    def test_median_across_seeds(self):
        ns = [2 ** k for k in range(4, 10)]
        recs = []
        for n in ns:
            # median of {0.5, 1, 50} * n^-1 is n^-1
            for s, fac in enumerate((0.5, 1.0, 50.0)):
                recs.append(ConvergenceRecord("stp", 0, n, 1.0, None,
                                              fac / n, 0, s, 0.0))
        np.testing.assert_allclose(fit_slope(recs), -1.0, atol=1e-12)

    def test_drops_nonpositive_and_requires_four(self):
        ns = [16, 32, 64, 128]
        recs = self.make_records(ns, [1e-2, 0.0, 1e-3, 1e-4])
        with pytest.raises(ValueError):
            fit_slope(recs)  # only 3 survive

    def test_work_range_filter(self):
        ns = [2 ** k for k in range(4, 12)]
        errs = [n ** -1.0 for n in ns]
        recs = self.make_records(ns, errs)
        slope = fit_slope(recs, work_range=(32, 512))
        np.testing.assert_allclose(slope, -1.0, atol=1e-12)


class TestCli:
    def test_list_flag(self, capsys):
        assert main(["--list"]) == 0
        out = capsys.readouterr().out
        assert "synthetic" in out and "sobol" in out

    def test_run_and_output(self, tmp_path, capsys):
        out = tmp_path / "study.csv"
        rc = main(["--model", "synthetic", "--outer", "sobol", "--inner",
                   "sobol", "--sigma", "1", "--L", "4..6", "--seeds", "0",
                   "--mode", "stp", "--out", str(out), "--no-timing"])
        assert rc == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == CSV_HEADER
        assert len(lines) == 4

    def test_cli_overrides_config(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("model = synthetic\nouter = mc\ninner = mc\n"
                       "L = 4..5\nseeds = 0\nmode = ftp\n")
        out = tmp_path / "o.csv"
        rc = main([str(cfg), "--mode", "stp", "--out", str(out),
                   "--no-timing"])
        assert rc == 0
        recs = read_csv(out)
        assert {r.mode for r in recs} == {"stp"}

    def test_failure_exit_code(self, tmp_path, capsys):
        out = tmp_path / "f.csv"
        rc = main(["--model", "synthetic", "--outer", "optw", "--inner",
                   "sobol", "--sigma", "1", "--L", "13", "--seeds", "0",
                   "--mode", "ftp", "--out", str(out), "--no-timing"])
        assert rc == 1
        err = capsys.readouterr().err
        assert "FAILED cell" in err
