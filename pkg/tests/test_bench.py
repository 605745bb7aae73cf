"""Benchmark harness: spec validation, sweep mechanics, CSV, summaries."""

import numpy as np
import pytest

import taskgp
from taskgp import bench
from taskgp.bench import (
    BenchRecord,
    ExperimentSpec,
    bootstrap_half_width,
    emit_csv,
    load_records,
    run_experiment,
    summarize,
)
from taskgp.errors import InvalidConfig, TaskGPError, TilingError


def record(**overrides):
    base = dict(
        operation="predict",
        n_train=64,
        n_test=64,
        regressors=4,
        tiles_per_dim=1,
        worker_count=1,
        repetitions=2,
        warmup=0,
        seed=0,
        mean_s=1.0,
        ci_half_width_s=0.1,
        raw_times_s=(0.9, 1.1),
    )
    base.update(overrides)
    return BenchRecord(**base)


class TestExperimentSpec:
    def test_defaults_valid(self):
        spec = ExperimentSpec()
        assert spec.operation == "predict"

    def test_unknown_operation_rejected(self):
        with pytest.raises(InvalidConfig):
            ExperimentSpec(operation="train")

    @pytest.mark.parametrize("n", [0, 3, 100])
    def test_sizes_must_be_powers_of_two(self, n):
        with pytest.raises(InvalidConfig):
            ExperimentSpec(n_train=n)

    def test_tiles_must_divide_n_train(self):
        with pytest.raises(TilingError):
            ExperimentSpec(n_train=64, tiles_per_dim=(1, 3))

    def test_repetitions_floor(self):
        with pytest.raises(InvalidConfig):
            ExperimentSpec(repetitions=0)

    def test_worker_floor(self):
        with pytest.raises(InvalidConfig):
            ExperimentSpec(worker_count=(0,))


class TestRunExperiment:
    def test_record_count_and_raw_times(self):
        """One record per (workers, tiles) cell, each with reps raw times."""
        spec = ExperimentSpec(
            operation="predict",
            n_train=16,
            n_test=16,
            regressors=2,
            tiles_per_dim=(1, 2),
            worker_count=(1, 2),
            repetitions=3,
            warmup=1,
        )
        records = run_experiment(spec)
        assert len(records) == 4
        for rec in records:
            assert rec.error is None
            assert len(rec.raw_times_s) == 3
            assert rec.mean_s == pytest.approx(np.mean(rec.raw_times_s))
            assert rec.ci_half_width_s >= 0.0
        assert taskgp.current_runtime() is None

    @pytest.mark.parametrize("op", ["optimize", "predict_var", "predict_full_cov"])
    def test_all_operations_run(self, op):
        spec = ExperimentSpec(
            operation=op, n_train=16, n_test=16, regressors=2, repetitions=1
        )
        records = run_experiment(spec)
        assert records[0].error is None

    def test_failed_cell_recorded_not_raised(self, monkeypatch):
        calls = []

        def flaky(op, train, test, tiles):
            calls.append(tiles)
            if tiles == 2:
                raise TaskGPError("synthetic failure")

        monkeypatch.setattr(bench, "_run_operation", flaky)
        spec = ExperimentSpec(
            n_train=16, n_test=16, regressors=2, tiles_per_dim=(1, 2), repetitions=2
        )
        records = run_experiment(spec)
        assert records[0].error is None
        assert "synthetic failure" in records[1].error
        assert records[1].raw_times_s == ()
        assert taskgp.current_runtime() is None

    def test_deterministic_data_per_seed(self):
        a, _ = bench.make_benchmark_data(16, 8, 2, seed=7)
        b, _ = bench.make_benchmark_data(16, 8, 2, seed=7)
        np.testing.assert_array_equal(a.z, b.z)


class TestBootstrap:
    def test_equal_samples_have_zero_width(self):
        assert bootstrap_half_width([2.0, 2.0, 2.0, 2.0]) == 0.0

    def test_width_non_negative_and_seeded(self):
        times = [1.0, 1.5, 2.0, 0.5, 1.2]
        w1 = bootstrap_half_width(times, seed=3)
        w2 = bootstrap_half_width(times, seed=3)
        assert w1 == w2 > 0.0

    def test_empty_rejected(self):
        with pytest.raises(InvalidConfig):
            bootstrap_half_width([])


class TestCsv:
    def test_header_plus_one_row_per_record(self, tmp_path):
        path = str(tmp_path / "bench.csv")
        emit_csv([record(), record(worker_count=2), record(worker_count=4)], path)
        assert len(open(path).read().strip().split("\n")) == 4

    def test_round_trip(self, tmp_path):
        path = str(tmp_path / "bench.csv")
        original = [
            record(),
            record(tiles_per_dim=4, mean_s=0.123456789012345678),
            record(error="TaskGPError: cell exploded", raw_times_s=()),
        ]
        emit_csv(original, path)
        assert load_records(path) == original

    def test_empty_records_rejected(self, tmp_path):
        with pytest.raises(InvalidConfig):
            emit_csv([], str(tmp_path / "bench.csv"))


class TestSummarize:
    def test_single_record(self):
        text = summarize([record()])
        assert "speedup 1.00" in text

    def test_two_worker_counts(self):
        """10s vs 5s means the faster one shows a 2x speedup."""
        recs = [
            record(worker_count=1, mean_s=10.0),
            record(worker_count=4, mean_s=5.0),
        ]
        text = summarize(recs)
        assert "workers=4: 5.0000s" in text
        assert "speedup 2.00" in text

    def test_tiling_speedups(self):
        recs = [
            record(tiles_per_dim=1, mean_s=8.0),
            record(tiles_per_dim=8, mean_s=2.0),
        ]
        assert "speedup 4.00" in summarize(recs)

    def test_mixed_sizes_rejected(self):
        with pytest.raises(InvalidConfig):
            summarize([record(n_train=64), record(n_train=128)])

    def test_failed_cells_listed(self):
        text = summarize([record(), record(worker_count=2, error="boom")])
        assert "FAILED" in text and "boom" in text
