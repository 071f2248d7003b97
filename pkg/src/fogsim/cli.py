"""Command-line entry point.

Subcommands:
  run <scenario.json>    one run, writes runs.csv + events.jsonl
  sweep <sweep.json>     multi-point experiment, writes runs.csv + agg.csv
  verify                 potential / convergence / failure-stability suites
  figures <results dir>  emit ready-to-plot aggregated CSVs per figure id
"""

from __future__ import annotations

import argparse
import os
import sys

from fogsim.scenario import Scenario, ScenarioError
from fogsim import engine, metrics


def _cmd_run(args) -> int:
    scenario = Scenario.load(args.scenario)
    if args.seed is not None:
        scenario = scenario.with_overrides(seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    if args.frozen:
        conv = engine.run_frozen(scenario)
        row = metrics.run_record(scenario, frozen=True, report=conv)
        print(f"converged in {conv.sweeps} sweeps / {conv.activations} "
              f"activations, phi={conv.phi_trajectory[-1]:.6f}, "
              f"nash={'ok' if conv.nash_ok else 'FAILED'}")
        metrics.write_runs_csv([row], os.path.join(args.out, "runs.csv"))
        return 0 if conv.nash_ok else 1
    report = engine.run(scenario)
    row = metrics.run_record(scenario, report=report)
    metrics.write_runs_csv([row], os.path.join(args.out, "runs.csv"))
    metrics.write_event_log(report, os.path.join(args.out, "events.jsonl"))
    print(f"mean latency {row['mean_latency']:.4f}  phi_final "
          f"{row['phi_final']:.4f}  msgs p2p/mem/ilp "
          f"{row['msgs_p2p']}/{row['msgs_mem']}/{row['msgs_ilp']}")
    return 0


def _cmd_sweep(args) -> int:
    spec = metrics.SweepSpec.load(args.sweep)
    rows = metrics.sweep(spec, args.out, jobs=args.jobs)
    print(f"{len(rows)} run records -> {args.out}/runs.csv, {args.out}/agg.csv")
    return 0


def _cmd_verify(args) -> int:
    ok = True
    trials = 200 if args.quick else 1000
    seeds = (1, 2, 3) if args.quick else tuple(range(1, 11))
    base = {"topology": {"n": 10}, "workload": {"catalog": {"size": 8}},
            "agent": {"mode": "oracle"}}

    worst = 0.0
    for s in seeds:
        rep = engine.verify_exact_potential(
            Scenario(base).with_overrides(seed=s), trials=trials)
        worst = max(worst, rep["max_residual"])
    passed = worst < 1e-9
    ok &= passed
    print(f"[{'PASS' if passed else 'FAIL'}] exact potential: "
          f"max residual {worst:.2e}")

    all_conv = True
    for s in seeds:
        conv = engine.run_frozen(Scenario(base).with_overrides(seed=s))
        all_conv &= conv.nash_ok
    ok &= all_conv
    print(f"[{'PASS' if all_conv else 'FAIL'}] convergence + Nash certificate "
          f"on {len(seeds)} frozen instances")

    stable = True
    for s in seeds[:3]:
        scen = Scenario(base).with_overrides(seed=s)
        conv = engine.run_frozen(scen)
        victims = [i for i in conv.graph.alive_nodes()
                   if _removable(conv.graph, i)][:2]
        for v in victims:
            engine.topology.fail_node(conv.graph, v)
            conv.joint.pop(v, None)
        demand = engine.demand_snapshot(scen.build_profile(), 0,
                                        conv.graph.alive_nodes())
        try:
            engine.frozen_descent(conv.graph, conv.joint, demand,
                                  scen.weights(), scen.costs(),
                                  scen.agent_config(), scen.rng("activation"),
                                  scen.cfg["workload"]["catalog"]["size"])
        except engine.EngineError:
            stable = False
    ok &= stable
    print(f"[{'PASS' if stable else 'FAIL'}] failure stability: dynamics "
          f"re-terminate after node failures")
    return 0 if ok else 1


def _removable(graph, node) -> bool:
    """Node whose removal keeps the alive graph connected."""
    from fogsim.topology import is_connected
    graph.alive[node] = False
    ok = is_connected(graph)
    graph.alive[node] = True
    return ok


FIGURE_AXES = {
    "latency_over_time": "time",
    "convergence_vs_size": "node_count",
    "degradation_vs_failures": "failure_rate",
    "overhead_vs_size": "node_count",
    "latency_vs_memory": "memory_size",
}


def _cmd_figures(args) -> int:
    """Aggregate every runs.csv under the results dir into plot-ready CSVs."""
    os.makedirs(args.out, exist_ok=True)
    found = 0
    for root, _dirs, files in sorted(os.walk(args.results)):
        if "runs.csv" not in files:
            continue
        rows = metrics.read_runs_csv(os.path.join(root, "runs.csv"))
        agg = metrics.aggregate(rows)
        name = os.path.basename(root.rstrip("/")) or "results"
        metrics.write_agg_csv(agg, os.path.join(args.out, f"{name}_agg.csv"))
        found += 1
    if not found:
        print("no runs.csv found under results dir", file=sys.stderr)
        return 1
    print(f"aggregated {found} result set(s) -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fogsim")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="execute one scenario")
    r.add_argument("scenario")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--out", default="results/run")
    r.add_argument("--frozen", action="store_true",
                   help="frozen-demand oracle dynamics instead of a timed run")
    r.set_defaults(fn=_cmd_run)

    s = sub.add_parser("sweep", help="run a multi-point experiment")
    s.add_argument("sweep")
    s.add_argument("--out", default="results/sweep")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(fn=_cmd_sweep)

    v = sub.add_parser("verify", help="theorem-level verification suites")
    v.add_argument("--quick", action="store_true")
    v.set_defaults(fn=_cmd_verify)

    f = sub.add_parser("figures", help="emit plot-ready CSVs from results")
    f.add_argument("results")
    f.add_argument("--out", default="results/figures")
    f.set_defaults(fn=_cmd_figures)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except (ScenarioError, metrics.MetricsError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
