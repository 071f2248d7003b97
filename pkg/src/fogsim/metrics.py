"""Metric computation, run/sweep CSV emission, result aggregation.

Message-cost model: one peer summary exchange = 2 messages (one per
direction), one shared-memory write = 1 message, one centralized snapshot =
2 messages per alive node.  Per-run CSV rows use the fixed fogsim-runs-v1
column order; sweep aggregation emits fogsim-agg-v1 with mean/std pairs.
Steady-state metrics exclude the first 10% of the horizon as warm-up.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from fogsim.scenario import Scenario
from fogsim import engine as _engine


RUNS_SCHEMA = "fogsim-runs-v1"
AGG_SCHEMA = "fogsim-agg-v1"

RUN_COLUMNS = ["scenario_hash", "controller", "seed", "axis_value",
               "mean_latency", "p95_latency", "adaptation_time", "degradation",
               "msgs_p2p", "msgs_mem", "msgs_ilp", "sweeps_to_converge",
               "activations_to_converge", "phi_final"]

AGG_METRICS = RUN_COLUMNS[4:]

SENTINEL = -1.0  # metric not applicable / never settled


class MetricsError(ValueError):
    pass


def moving_average(series: np.ndarray, window: int) -> np.ndarray:
    """Trailing moving average; partial windows at the start."""
    s = np.asarray(series, dtype=float)
    c = np.concatenate([[0.0], np.cumsum(s)])
    out = np.empty(len(s))
    for k in range(len(s)):
        lo = max(0, k - window + 1)
        out[k] = (c[k + 1] - c[lo]) / (k + 1 - lo)
    return out


def adaptation_time(series: np.ndarray, shift_slot: int, band: float = 0.05,
                    ma_window: int = 50, hold: int = 30) -> int:
    """Slots after the shift until the trailing moving average stays within
    +/-band of the post-shift steady-state mean for `hold` consecutive
    slots; SENTINEL if it never settles.

    The averaging window is sized to dominate per-slot arrival-sampling
    noise so the statistic measures adaptation of the controller, not how
    long the noisy average takes to re-enter a tight band by chance."""
    series = np.asarray(series, dtype=float)
    if not 0 <= shift_slot < len(series):
        raise MetricsError("shift slot outside series")
    post = series[shift_slot:]
    if len(post) < ma_window + hold:
        raise MetricsError("series too short after shift")
    steady = float(post[-max(hold, len(post) // 4):].mean())
    tol = band * abs(steady)
    ma = moving_average(post, ma_window)
    within = np.abs(ma - steady) <= tol
    run = 0
    for k in range(len(within)):
        run = run + 1 if within[k] else 0
        if run == hold:
            return k - hold + 1
    return int(SENTINEL)


def steady_mean(series: np.ndarray, warmup: int) -> float:
    tail = np.asarray(series[warmup:], dtype=float)
    if len(tail) == 0:
        raise MetricsError("empty steady-state window")
    return float(tail.mean())


def resilience(latency_with: np.ndarray, latency_without: np.ndarray,
               warmup: int = 0) -> float:
    """Relative latency degradation on steady-state windows."""
    base = steady_mean(latency_without, warmup)
    if base == 0:
        raise MetricsError("zero baseline latency")
    return (steady_mean(latency_with, warmup) - base) / base


# ---------------------------------------------------------------------------
# Per-run records
# ---------------------------------------------------------------------------

def run_record(scenario: Scenario, axis_value: float = 0.0,
               frozen: bool = False, report=None) -> dict:
    """One fixed-schema row for a run (executed here unless given)."""
    if frozen:
        conv = report if report is not None else _engine.run_frozen(scenario)
        lat = conv.phi_trajectory[-1]  # converged objective stands in
        return {
            "scenario_hash": scenario.hash(), "controller": "agentic",
            "seed": scenario.seed, "axis_value": axis_value,
            "mean_latency": lat, "p95_latency": lat,
            "adaptation_time": SENTINEL, "degradation": SENTINEL,
            "msgs_p2p": 0, "msgs_mem": 0, "msgs_ilp": 0,
            "sweeps_to_converge": conv.sweeps,
            "activations_to_converge": conv.activations,
            "phi_final": conv.phi_trajectory[-1],
        }
    rep = report if report is not None else _engine.run(scenario)
    warm = rep.warmup
    lat = rep.latency
    shifts = scenario.build_profile().shift_slots()
    adapt = SENTINEL
    if shifts and shifts[-1] < rep.horizon:
        try:
            adapt = adaptation_time(lat, shifts[-1])
        except MetricsError:
            adapt = SENTINEL
    tail = lat[warm:]
    return {
        "scenario_hash": rep.scenario_hash, "controller": rep.controller,
        "seed": rep.seed, "axis_value": axis_value,
        "mean_latency": steady_mean(lat, warm) if len(tail) else SENTINEL,
        "p95_latency": float(np.percentile(tail, 95)) if len(tail) else SENTINEL,
        "adaptation_time": adapt, "degradation": SENTINEL,
        "msgs_p2p": rep.msgs_p2p, "msgs_mem": rep.msgs_mem,
        "msgs_ilp": rep.msgs_ilp,
        "sweeps_to_converge": rep.last_accepted_slot,
        "activations_to_converge": rep.last_accepted_activation,
        "phi_final": rep.phi_final,
    }


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_runs_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {RUNS_SCHEMA}\n")
        w = csv.writer(fh)
        w.writerow(RUN_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in RUN_COLUMNS])


def read_runs_csv(path) -> list[dict]:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != f"# {RUNS_SCHEMA}":
            raise MetricsError(f"unexpected schema header {header!r}")
        rows = list(csv.DictReader(fh))
    for row in rows:
        for c in RUN_COLUMNS[3:]:
            row[c] = float(row[c])
        row["seed"] = int(row["seed"])
    return rows


def write_event_log(report, path) -> None:
    with open(path, "w") as fh:
        for t in range(report.horizon):
            fh.write(json.dumps({"slot": t, "phi": report.phi[t],
                                 "latency": report.latency[t],
                                 "arrivals": int(report.arrivals[t])},
                                sort_keys=True) + "\n")
        for ev in report.events:
            fh.write(json.dumps(ev, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

AXES = ("node_count", "memory_size", "coordination_interval", "failure_rate",
        "time")


@dataclass
class SweepSpec:
    template: dict
    axis: str
    values: list
    controllers: list[str]
    runs: int = 10
    base_seed: int = 100
    frozen: bool = False
    time_window: int = 50

    def __post_init__(self):
        if self.axis not in AXES:
            raise MetricsError(f"unknown axis {self.axis!r}")
        if self.runs < 10:
            raise MetricsError("need at least 10 runs per setting")

    @classmethod
    def load(cls, path) -> "SweepSpec":
        with open(path) as fh:
            d = json.load(fh)
        return cls(**d)


def apply_axis(template: dict, axis: str, value) -> dict:
    over = {
        "node_count": {"topology": {"n": int(value)}},
        "memory_size": {"memory": {"episodes": int(value)}},
        "coordination_interval": {"coordination": {"tau": int(value)}},
        "failure_rate": {"failures": {"rate": float(value)}},
        "time": {},
    }[axis]
    return Scenario(template).with_overrides(**over).cfg


def _sweep_one(args):
    cfg, controller, seed, axis_value, frozen = args
    scenario = Scenario(cfg).with_overrides(controller=controller, seed=seed)
    return run_record(scenario, axis_value=axis_value, frozen=frozen)


def sweep(spec: SweepSpec, out_dir, jobs: int = 1) -> list[dict]:
    os.makedirs(out_dir, exist_ok=True)
    tasks = []
    if spec.axis == "time":
        for controller in spec.controllers:
            for r in range(spec.runs):
                tasks.append((spec.template, controller, spec.base_seed + r,
                              0.0, spec.frozen))
    else:
        for value in spec.values:
            cfg = apply_axis(spec.template, spec.axis, value)
            for controller in spec.controllers:
                for r in range(spec.runs):
                    tasks.append((cfg, controller, spec.base_seed + r,
                                  float(value), spec.frozen))

    if spec.axis == "time":
        rows = _sweep_time(spec, out_dir)
    else:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                rows = list(pool.map(_sweep_one, tasks))
        else:
            rows = [_sweep_one(t) for t in tasks]

    if spec.axis == "failure_rate" and 0.0 in [float(v) for v in spec.values]:
        base = {(r["controller"], r["seed"]): r["mean_latency"]
                for r in rows if r["axis_value"] == 0.0}
        for r in rows:
            b = base.get((r["controller"], r["seed"]))
            if b:
                r["degradation"] = (r["mean_latency"] - b) / b

    write_runs_csv(rows, os.path.join(out_dir, "runs.csv"))
    agg = aggregate(rows)
    write_agg_csv(agg, os.path.join(out_dir, "agg.csv"))
    return rows


def _sweep_time(spec: SweepSpec, out_dir) -> list[dict]:
    """Time axis: per-window latency rows from full-horizon runs."""
    rows = []
    for controller in spec.controllers:
        for r in range(spec.runs):
            scenario = Scenario(spec.template).with_overrides(
                controller=controller, seed=spec.base_seed + r)
            rep = _engine.run(scenario)
            base = run_record(scenario, report=rep)
            for start in range(0, rep.horizon, spec.time_window):
                row = dict(base)
                row["axis_value"] = float(start)
                row["mean_latency"] = float(
                    rep.latency[start:start + spec.time_window].mean())
                rows.append(row)
    return rows


def aggregate(rows: list[dict]) -> list[dict]:
    """Mean/std per (axis_value, controller); equals offline recomputation
    from the per-run rows by construction."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault((row["axis_value"], row["controller"]), []).append(row)
    out = []
    for (axis_value, controller) in sorted(groups):
        grp = groups[(axis_value, controller)]
        rec = {"axis_value": axis_value, "controller": controller,
               "n_runs": len(grp)}
        for m in AGG_METRICS:
            vals = np.array([float(g[m]) for g in grp])
            rec[f"{m}_mean"] = float(vals.mean())
            rec[f"{m}_std"] = float(vals.std())
        out.append(rec)
    return out


AGG_COLUMNS = (["axis_value", "controller", "n_runs"]
               + [f"{m}_{s}" for m in AGG_METRICS for s in ("mean", "std")])


def write_agg_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {AGG_SCHEMA}\n")
        w = csv.writer(fh)
        w.writerow(AGG_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in AGG_COLUMNS])


def read_agg_csv(path) -> list[dict]:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != f"# {AGG_SCHEMA}":
            raise MetricsError(f"unexpected schema header {header!r}")
        return list(csv.DictReader(fh))
