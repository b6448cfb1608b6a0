import csv
import json
import math
from dataclasses import replace

import numpy as np
import pytest

from curie_weiss import __version__
from curie_weiss.config import ExperimentConfig, ExperimentKind
from curie_weiss.core import ModelSpec
from curie_weiss.exceptions import DomainError
from curie_weiss.experiments import (
    OUTCOMES,
    ExperimentReport,
    estimate_report,
    jsonable,
    read_report_csv,
    run_approx_error,
    run_clt,
    run_consistency,
    run_coverage,
    run_equivalence,
    run_experiment,
    run_ml_oracle_compare,
    variance_agrees,
    write_report,
)
from curie_weiss.sampler import SampleMatrix, SamplerConfig, sample_multigroup


@pytest.fixture
def model():
    return ModelSpec.from_lists([0.5, 1.5], [200, 200], [100, 100])


def make_config(kind, model, tmp_path, **options):
    options.setdefault("n_obs", (200, 800))
    options.setdefault("replications", 8)
    options.setdefault("seed", 99)
    return ExperimentConfig(kind, model, output_dir=tmp_path, **options)


class TestConsistency:

    def test_rows_and_counts(self, model, tmp_path):
        cfg = make_config(ExperimentKind.CONSISTENCY, model, tmp_path, estimators=("gamma", "zeta"))
        report = run_consistency(cfg)
        assert report.name == "consistency"
        assert len(report.rows) == 2 * 2 * 2
        for row in report.rows:
            assert sum(row[f"count_{label}"] for label in OUTCOMES) == 8
            assert row["median_abs_error"] >= 0
        assert set(report.checks) == {
            f"{name}_group{group}_median_strictly_decreasing" for name in ("gamma", "zeta") for group in (0, 1)
        }
        assert all(len(report.summary[f"zeta_group{group}_medians"]) == 2 for group in (0, 1))

    def test_final_error_check_at_large_n(self, model, tmp_path, mocker):
        mocker.patch("curie_weiss.experiments.CONSISTENCY_FINAL_N", 800)
        cfg = make_config(ExperimentKind.CONSISTENCY, model, tmp_path, estimators=("zeta", "gamma2"))
        report = run_consistency(cfg)
        below = {name for name in report.checks if "_median_below_" in name}
        assert below == {"zeta_group0_median_below_0.02", "zeta_group1_median_below_0.02"}

    def test_equal_medians_are_not_a_decrease(self, model, tmp_path, mocker):
        mocker.patch("curie_weiss.experiments._quantiles", return_value=(0.01, 0.0))
        report = run_consistency(make_config(ExperimentKind.CONSISTENCY, model, tmp_path))
        assert report.checks["zeta_group0_median_strictly_decreasing"] is False

    @pytest.mark.slow
    def test_errors_shrink_to_limit(self, model, tmp_path):
        cfg = make_config(ExperimentKind.CONSISTENCY, model, tmp_path, n_obs=(100, 1000, 10000, 100000),
                          replications=50, threads=4)
        report = run_consistency(cfg)
        assert report.passed, report.failed_checks
        assert len([name for name in report.checks if "_median_below_" in name]) == 4

    def test_thread_count_does_not_change_results(self, model, tmp_path):
        serial = run_consistency(make_config(ExperimentKind.CONSISTENCY, model, tmp_path, threads=1))
        parallel = run_consistency(make_config(ExperimentKind.CONSISTENCY, model, tmp_path, threads=3))
        assert serial.rows == parallel.rows
        assert serial.summary == parallel.summary

    def test_seed_changes_results(self, model, tmp_path):
        first = run_consistency(make_config(ExperimentKind.CONSISTENCY, model, tmp_path, seed=1))
        second = run_consistency(make_config(ExperimentKind.CONSISTENCY, model, tmp_path, seed=2))
        assert first.rows != second.rows

    def test_ml_oracle_is_not_a_closed_form_estimator(self, model, tmp_path):
        cfg = make_config(ExperimentKind.CONSISTENCY, model, tmp_path, estimators=("zeta", "ml_oracle"))
        report = run_consistency(cfg)
        assert {row["estimator"] for row in report.rows} == {"zeta"}


class TestCltAndCoverage:

    def test_clt_rows(self, model, tmp_path):
        cfg = make_config(ExperimentKind.CLT, model, tmp_path, n_obs=(500,), replications=12)
        report = run_clt(cfg)
        assert len(report.rows) == 2 * 2
        for row in report.rows:
            assert row["formula_variance"] > 0
            assert row["replications_used"] <= 12
        high_zeta = next(row for row in report.rows if row["estimator"] == "zeta" and row["group"] == 0)
        assert high_zeta["limit_variance"] == pytest.approx(2 * 0.25 * 0.75 ** 2 / 0.25)
        assert "zeta_group0_n500_variance" in report.checks
        assert "zeta_groups0_1_n500_uncorrelated" in report.checks
        assert report.summary["cross_group_covariance"]
        for row in report.rows:
            if row["empirical_variance"] is not None:
                low, high = row["variance_ci"]
                assert low < row["empirical_variance"] < high

    @pytest.mark.parametrize("row, expected", [
        ({"variance_ratio": 1.1, "variance_ci": (1.05, 1.2), "formula_variance": 1.0}, True),
        ({"variance_ratio": 0.8, "variance_ci": (0.7, 1.05), "formula_variance": 1.0}, True),
        ({"variance_ratio": 0.8, "variance_ci": (0.68, 0.96), "formula_variance": 1.0}, False),
        ({"variance_ratio": None, "variance_ci": None, "formula_variance": None}, False),
    ])
    def test_variance_agreement(self, row, expected):
        assert variance_agrees(row) is expected

    @pytest.mark.slow
    def test_clt_variance_and_normality(self, model, tmp_path):
        cfg = make_config(ExperimentKind.CLT, model, tmp_path, n_obs=(20000,), replications=500, threads=4)
        report = run_clt(cfg)
        variance_checks = {name: ok for name, ok in report.checks.items() if name.endswith("_variance")}
        normality_checks = {name: ok for name, ok in report.checks.items() if name.endswith("_normality")}
        assert len(variance_checks) == len(normality_checks) == 4
        assert all(variance_checks.values()), variance_checks
        assert all(normality_checks.values()), normality_checks

    def test_coverage_rows(self, model, tmp_path):
        cfg = make_config(ExperimentKind.COVERAGE, model, tmp_path, n_obs=(500,), replications=10)
        report = run_coverage(cfg)
        assert len(report.rows) == 2 * 2
        for row in report.rows:
            assert 0 <= row["covered"] <= row["replications_used"] <= 10
            assert row["level"] == 0.95
        assert len(report.checks) == 4

    @pytest.mark.slow
    def test_coverage_is_close_to_level(self, tmp_path):
        model = ModelSpec.from_lists([0.5], [400], [200])
        cfg = make_config(ExperimentKind.COVERAGE, model, tmp_path, n_obs=(2000,), replications=400,
                          estimators=("zeta",), threads=4)
        report = run_coverage(cfg)
        assert report.rows[0]["coverage"] == pytest.approx(0.95, abs=0.05)


class TestEquivalenceExperiment:

    def test_grid(self, tmp_path):
        model = ModelSpec.from_lists([0.5], [100], [50])
        cfg = make_config(ExperimentKind.EQUIVALENCE, model, tmp_path, n_obs=(300,), replications=4,
                          n_pop_grid=(100, 200))
        report = run_equivalence(cfg)
        assert [row["n_pop"] for row in report.rows] == [100, 200]
        assert [row["k_obs"] for row in report.rows] == [50, 100]
        assert all(row["n_samples"] == 4 for row in report.rows)
        assert report.checks == {"n100_group0_no_violations": True, "n200_group0_no_violations": True}
        assert len(report.summary["max_gap_by_n_pop"]["group0"]) == 2

    def test_separation_failure_is_a_failed_check(self, tmp_path):
        model = ModelSpec.from_lists([0.5], [100], [50])
        cfg = make_config(ExperimentKind.EQUIVALENCE, model, tmp_path, n_obs=(50,), replications=2,
                          n_pop_grid=(4, 100))
        report = run_equivalence(cfg)
        assert report.checks["n4_separation"] is False
        assert not report.passed
        assert [row["n_pop"] for row in report.rows] == [100]


class TestApproxError:

    def test_rows_and_fits(self, model, tmp_path):
        cfg = make_config(ExperimentKind.APPROX_ERROR, model, tmp_path,
                          n_pop_grid=(50, 100, 200, 400), moment_orders=(1, 2))
        report = run_approx_error(cfg)
        # per N and group: the pair correlation plus one row per moment order
        assert len(report.rows) == 4 * 2 * 3
        assert all(row["abs_error"] >= 0 for row in report.rows)
        fits = report.summary["fits"]
        assert len(fits) == 2 * 3
        pair_high = next(fit for fit in fits if fit["beta"] == 0.5 and fit["quantity"] == "pair_correlation")
        assert pair_high["bound_power"] == -2.0
        assert pair_high["decay_power"] == -2.0
        assert pair_high["slope"] < 0
        assert {fit["decay_power"] for fit in fits if fit is not pair_high} == {-1.0}

    @pytest.mark.parametrize("slope, failing", [
        (-1.0, {"beta0.5_pair_correlation_k2_decay"}),
        (-1.2, {"beta0.5_pair_correlation_k2_decay"}),
        (-0.5, {"beta0.5_pair_correlation_k2_decay", "beta0.5_sigma_moment_k1_decay",
                "beta1.5_pair_correlation_k2_decay", "beta1.5_sigma_moment_k1_decay"}),
        (-2.0, {"beta0.5_sigma_moment_k1_decay", "beta1.5_pair_correlation_k2_decay",
                "beta1.5_sigma_moment_k1_decay"}),
    ])
    def test_decay_check_is_two_sided(self, model, tmp_path, mocker, slope, failing):
        mocker.patch("curie_weiss.experiments._loglog_slope", return_value=slope)
        cfg = make_config(ExperimentKind.APPROX_ERROR, model, tmp_path,
                          n_pop_grid=(50, 100), moment_orders=(1,))
        report = run_approx_error(cfg)
        assert set(report.failed_checks) == failing

    @pytest.mark.slow
    def test_errors_decay_at_finite_size_order(self, model, tmp_path):
        cfg = make_config(ExperimentKind.APPROX_ERROR, model, tmp_path,
                          n_pop_grid=(50, 100, 200, 400, 800, 1600), moment_orders=(1, 2, 3))
        report = run_approx_error(cfg)
        assert report.passed, report.summary["fits"]

    def test_critical_coupling_skipped(self, tmp_path):
        model = ModelSpec.from_lists([1.0], [100], [50])
        cfg = make_config(ExperimentKind.APPROX_ERROR, model, tmp_path, n_pop_grid=(50, 100))
        assert run_approx_error(cfg).rows == []


class TestMLCompare:

    def test_rows_and_summary(self, model, tmp_path):
        cfg = make_config(ExperimentKind.ML_COMPARE, model, tmp_path, n_obs=(300,), replications=3)
        report = run_ml_oracle_compare(cfg)
        assert len(report.rows) == 3 * 2 * 2
        assert {row["estimator"] for row in report.rows} == {"gamma", "zeta"}
        assert report.checks == {"group0_solved": True, "group1_solved": True}
        high_rows = [row for row in report.rows if row["group"] == 0 and row["estimator"] == "zeta"]
        assert all(row["abs_difference"] < 0.2 for row in high_rows)
        assert report.summary["group0"]["solved"] == 3
        assert set(report.summary["group0"]) == {"solved", "bracket_failures", "gamma", "zeta"}
        assert report.summary["group0"]["zeta"]["compared"] == 3

    def test_follows_estimator_list(self, model, tmp_path):
        cfg = make_config(ExperimentKind.ML_COMPARE, model, tmp_path, n_obs=(300,), replications=2,
                          estimators=("gamma2", "ml_oracle"))
        report = run_ml_oracle_compare(cfg)
        assert {row["estimator"] for row in report.rows} == {"gamma2"}
        assert set(report.summary["group1"]) == {"solved", "bracket_failures", "gamma2"}

    def test_needs_a_closed_form_estimator(self, model, tmp_path):
        cfg = make_config(ExperimentKind.ML_COMPARE, model, tmp_path, estimators=("ml_oracle",))
        with pytest.raises(DomainError):
            run_ml_oracle_compare(cfg)

    def test_bracket_failures_are_counted(self, model, tmp_path):
        cfg = make_config(ExperimentKind.ML_COMPARE, model, tmp_path, n_obs=(300,), replications=2,
                          ml_bracket=(-5.0, -4.0))
        report = run_ml_oracle_compare(cfg)
        assert report.summary["group1"]["bracket_failures"] == 2
        assert report.checks["group1_solved"] is False


class TestEstimateReport:

    def test_estimates(self, model, tmp_path):
        cfg = make_config(ExperimentKind.ESTIMATE, model, tmp_path, estimators=("gamma", "zeta", "gamma2"))
        sample = sample_multigroup(model, 1000, SamplerConfig(6))
        report = estimate_report(sample, cfg)
        assert len(report.rows) == 3 * 2
        assert report.summary["sample_digest"] == sample.digest()
        assert all(row["ci"] is None for row in report.rows)

    def test_estimates_with_targets(self, model, tmp_path):
        cfg = make_config(ExperimentKind.ESTIMATE, model, tmp_path, estimators=("zeta",))
        sample = sample_multigroup(model, 1000, SamplerConfig(6))
        report = estimate_report(sample, cfg, with_targets=True)
        for row in report.rows:
            assert row["target"] is not None
            lo, hi = row["ci"]
            assert lo < row["value"] < hi

    def test_model_mismatch(self, model, tmp_path):
        cfg = make_config(ExperimentKind.ESTIMATE, model, tmp_path)
        sample = SampleMatrix(np.ones((5, 20)), (10, 10))
        with pytest.raises(DomainError):
            estimate_report(sample, cfg)


class TestReports:

    def test_run_experiment_dispatches(self, model, tmp_path, mocker):
        mocker.patch.dict(
            "curie_weiss.experiments.RUNNERS",
            {ExperimentKind.CLT: lambda cfg: ExperimentReport("clt", checks={"ok": True})},
        )
        report = run_experiment(make_config(ExperimentKind.CLT, model, tmp_path))
        assert report.passed

    def test_jsonable(self):
        assert jsonable({"a": math.inf, "b": (-math.inf, math.nan), 1: np.float64(0.5)}) == {
            "a": "inf",
            "b": ["-inf", "nan"],
            "1": 0.5,
        }
        assert jsonable(ExperimentKind.CLT) == "clt"

    def test_writes_csv_and_json(self, model, tmp_path):
        cfg = make_config(ExperimentKind.CONSISTENCY, model, tmp_path / "out")
        report = ExperimentReport(
            "consistency",
            rows=[{"n_obs": 10, "value": 0.5}, {"n_obs": 20, "value": -math.inf, "extra": 1}],
            summary={"note": "ok"},
            checks={"ok": True, "bad": False},
        )
        paths = write_report(report, cfg)
        assert [path.name for path in paths] == ["consistency.csv", "consistency.json"]

        lines = paths[0].read_text().splitlines()
        assert [line.split(":")[0] for line in lines[:3]] == ["# experiment", "# version", "# config"]
        rows = list(csv.DictReader(lines[3:]))
        assert rows[1] == {"n_obs": "20", "value": "-inf", "extra": "1"}

        payload = json.loads(paths[1].read_text())
        assert payload["version"] == __version__
        assert payload["config"]["seed"] == 99
        assert payload["checks"] == {"ok": True, "bad": False}
        assert payload["passed"] is False
        assert "rows" not in payload

    def test_csv_only_carries_config_and_version(self, model, tmp_path):
        cfg = replace(make_config(ExperimentKind.CONSISTENCY, model, tmp_path), output_format="csv")
        report = run_consistency(replace(cfg, replications=2))
        paths = write_report(report, cfg)
        assert [path.name for path in paths] == ["consistency.csv"]

        metadata, rows = read_report_csv(paths[0])
        assert metadata["experiment"] == "consistency"
        assert metadata["version"] == __version__
        assert metadata["config"] == jsonable(cfg.to_dict())
        assert metadata["config"]["seed"] == 99
        assert len(rows) == len(report.rows)
        assert rows[0]["estimator"] == report.rows[0]["estimator"]

    def test_json_only_carries_rows(self, model, tmp_path):
        cfg = replace(make_config(ExperimentKind.CLT, model, tmp_path), output_format="json")
        paths = write_report(ExperimentReport("clt", rows=[{"x": 1}]), cfg)
        assert [path.name for path in paths] == ["clt.json"]
        assert json.loads(paths[0].read_text())["rows"] == [{"x": 1}]

    def test_reports_are_reproducible(self, model, tmp_path):
        cfg = make_config(ExperimentKind.CONSISTENCY, model, tmp_path, replications=3)
        first = write_report(run_consistency(cfg), cfg)[1].read_text()
        second = write_report(run_consistency(cfg), cfg)[1].read_text()
        assert first == second
