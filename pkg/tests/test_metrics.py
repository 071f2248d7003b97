import numpy as np
import pytest

from fogsim.engine import run, run_frozen
from fogsim.metrics import (AGG_COLUMNS, RUN_COLUMNS, SENTINEL, MetricsError,
                            SweepSpec, adaptation_time, aggregate, apply_axis,
                            moving_average, read_agg_csv, read_runs_csv,
                            resilience, run_record, steady_mean, sweep,
                            write_agg_csv, write_event_log, write_runs_csv)
from fogsim.scenario import Scenario


def tiny_template():
    return {"topology": {"n": 5, "max_degree": 3},
            "workload": {"catalog": {"size": 5},
                         "phases": [{"start": 0, "base_rate": 2.0}]},
            "horizon": 40,
            "seed": 3}


class TestMovingAverage:
    def test_hand_values(self):
        out = moving_average(np.array([1.0, 2.0, 3.0, 4.0]), window=2)
        assert out == pytest.approx([1.0, 1.5, 2.5, 3.5])

    def test_window_one_is_identity(self):
        s = np.array([5.0, 1.0, 7.0])
        assert moving_average(s, 1) == pytest.approx(s)


class TestAdaptationTime:
    def test_step_series_hand_computed(self):
        # 100 slots at 10, then 30 slots at 30, then 170 slots at 20.
        # steady = 20, tol = 1.0; for full windows (k >= 49) the trailing
        # MA (window 50) is 20 + (79 - k)/5, which first enters the band
        # at k = 74 and stays, so the metric reports 74.
        series = np.array([10.0] * 100 + [30.0] * 30 + [20.0] * 170)
        assert adaptation_time(series, shift_slot=100) == 74

    def test_immediate_settle(self):
        series = np.array([10.0] * 50 + [20.0] * 100)
        assert adaptation_time(series, 50) == 0

    def test_never_settles(self):
        # a steady ramp: the trailing average only reaches the final band
        # briefly at the very end, never for `hold` consecutive slots
        post = np.linspace(0.0, 100.0, 200)
        series = np.concatenate([np.full(20, 1.0), post])
        assert adaptation_time(series, 20) == SENTINEL

    def test_input_validation(self):
        with pytest.raises(MetricsError):
            adaptation_time(np.ones(10), 20)
        with pytest.raises(MetricsError):
            adaptation_time(np.ones(100), 90)  # too short after shift


class TestSteadyStats:
    def test_steady_mean(self):
        s = np.array([100.0, 100.0, 2.0, 4.0])
        assert steady_mean(s, warmup=2) == 3.0
        with pytest.raises(MetricsError):
            steady_mean(s, warmup=4)

    def test_resilience(self):
        base = np.array([10.0] * 10)
        degraded = np.array([12.0] * 10)
        assert resilience(degraded, base) == pytest.approx(0.2)
        with pytest.raises(MetricsError):
            resilience(degraded, np.zeros(10))


class TestCsvRoundTrip:
    def test_runs_csv(self, tmp_path):
        scen = Scenario(tiny_template())
        row = run_record(scen, axis_value=5.0)
        assert list(row) == RUN_COLUMNS
        path = tmp_path / "runs.csv"
        write_runs_csv([row], path)
        back = read_runs_csv(path)
        assert len(back) == 1
        for c in RUN_COLUMNS[3:]:
            assert back[0][c] == pytest.approx(float(row[c]), abs=0)
        assert back[0]["scenario_hash"] == row["scenario_hash"]

    def test_schema_header_fail_closed(self, tmp_path):
        path = tmp_path / "runs.csv"
        scen = Scenario(tiny_template())
        write_runs_csv([run_record(scen)], path)
        text = path.read_text().replace("fogsim-runs-v1", "fogsim-runs-v2")
        path.write_text(text)
        with pytest.raises(MetricsError):
            read_runs_csv(path)

    def test_agg_csv_roundtrip(self, tmp_path):
        rows = [
            {"axis_value": 1.0, "controller": "agentic", "seed": s,
             "scenario_hash": "x", "mean_latency": float(s), "p95_latency": 0.0,
             "adaptation_time": -1.0, "degradation": -1.0, "msgs_p2p": 0,
             "msgs_mem": 0, "msgs_ilp": 0, "sweeps_to_converge": 0,
             "activations_to_converge": 0, "phi_final": 0.0}
            for s in (1, 2, 3)]
        agg = aggregate(rows)
        assert len(agg) == 1
        assert agg[0]["n_runs"] == 3
        assert agg[0]["mean_latency_mean"] == pytest.approx(2.0)
        assert agg[0]["mean_latency_std"] == pytest.approx(np.std([1, 2, 3]))
        path = tmp_path / "agg.csv"
        write_agg_csv(agg, path)
        back = read_agg_csv(path)
        assert float(back[0]["mean_latency_mean"]) == pytest.approx(2.0)
        assert list(back[0]) == AGG_COLUMNS

    def test_event_log_bytes_deterministic(self, tmp_path):
        scen = Scenario(tiny_template())
        for name in ("a", "b"):
            write_event_log(run(scen), tmp_path / f"{name}.jsonl")
        assert (tmp_path / "a.jsonl").read_bytes() == \
            (tmp_path / "b.jsonl").read_bytes()


class TestRunRecord:
    def test_frozen_record(self):
        scen = Scenario(tiny_template())
        conv = run_frozen(scen)
        row = run_record(scen, frozen=True, report=conv)
        assert row["phi_final"] == conv.phi_trajectory[-1]
        assert row["sweeps_to_converge"] == conv.sweeps
        assert row["adaptation_time"] == SENTINEL

    def test_timed_record_without_shift(self):
        scen = Scenario(tiny_template())
        row = run_record(scen)
        assert row["adaptation_time"] == SENTINEL
        assert row["mean_latency"] > 0


class TestSweep:
    def test_spec_validation(self):
        with pytest.raises(MetricsError):
            SweepSpec(tiny_template(), "nonsense", [1], ["agentic"])
        with pytest.raises(MetricsError):
            SweepSpec(tiny_template(), "node_count", [5], ["agentic"], runs=2)

    def test_apply_axis(self):
        cfg = apply_axis(tiny_template(), "memory_size", 40)
        assert cfg["memory"]["episodes"] == 40
        cfg = apply_axis(tiny_template(), "node_count", 8)
        assert cfg["topology"]["n"] == 8
        cfg = apply_axis(tiny_template(), "coordination_interval", 7)
        assert cfg["coordination"]["tau"] == 7
        cfg = apply_axis(tiny_template(), "failure_rate", 0.01)
        assert cfg["failures"]["rate"] == 0.01

    def test_frozen_sweep_outputs(self, tmp_path):
        spec = SweepSpec(tiny_template(), "node_count", [4, 6], ["agentic"],
                         runs=10, frozen=True)
        rows = sweep(spec, tmp_path)
        assert len(rows) == 20
        assert (tmp_path / "runs.csv").exists()
        agg = read_agg_csv(tmp_path / "agg.csv")
        assert {float(r["axis_value"]) for r in agg} == {4.0, 6.0}
        assert all(int(r["n_runs"]) == 10 for r in agg)

    def test_failure_rate_sweep_degradation(self, tmp_path):
        spec = SweepSpec(tiny_template(), "failure_rate", [0.0, 0.02],
                         ["greedy"], runs=10)
        rows = sweep(spec, tmp_path)
        base = [r for r in rows if r["axis_value"] == 0.0]
        hit = [r for r in rows if r["axis_value"] == 0.02]
        assert all(r["degradation"] == pytest.approx(0.0) for r in base)
        assert all(np.isfinite(r["degradation"]) for r in hit)
