"""Slotted simulation loop and theorem-level verification modes.

Per slot: sample arrivals, activate agents one at a time in a seeded random
permutation (or run the baseline controller), hold a coordination round
every tau slots, invoke the orchestrator every T_G slots, dispatch
execution tasks for accepted action changes, apply scheduled failures, and
accumulate metrics.  A run is a pure function of (scenario, seed).

Frozen mode holds demand constant and runs oracle best response to a fixed
point, producing a strictly decreasing potential trajectory and a Nash
certificate; it backs the potential/convergence/failure-stability suites.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fogsim import topology
from fogsim.topology import CLOUD, FogGraph, fail_node, is_connected
from fogsim.workload import DemandProfile, demand_snapshot, sample_arrivals
from fogsim.objective import (CostModel, JointAction, NodeAction,
                              ObjectiveWeights, evaluate_detailed)
from fogsim.agents import (AgentConfig, FogAgent, context_key,
                           move_neighborhood, observe, utility_oracle)
from fogsim.memory import SharedMemory, TopologySummary
from fogsim.orchestrator import orchestrate
from fogsim import coordination as coord
from fogsim import baselines
from fogsim.baselines import IlpInstance, solve_ilp
from fogsim.execution import Task, execute
from fogsim.scenario import Scenario


class EngineError(RuntimeError):
    pass


class ConvergenceBudgetExceeded(EngineError):
    """Frozen dynamics did not reach a fixed point within the activation
    budget.  Surfaced loudly: this would falsify the convergence claim."""


def random_joint(graph: FogGraph, catalog_size: int,
                 rng: np.random.Generator) -> JointAction:
    """Random feasible initial profile: random cache fill, random forwarding."""
    joint = {}
    for i in graph.alive_nodes():
        cap = graph.nodes[i].cache_capacity
        size = int(rng.integers(0, cap + 1)) if cap else 0
        cache = frozenset(int(c) for c in
                          rng.choice(catalog_size, size=min(size, catalog_size),
                                     replace=False)) if size else frozenset()
        targets = graph.neighbors(i) + [CLOUD]
        joint[i] = NodeAction(cache, int(targets[int(rng.integers(len(targets)))]))
    return joint


# ---------------------------------------------------------------------------
# Frozen-environment dynamics (Theorem verification)
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceReport:
    phi_trajectory: list[float]
    accepted_moves: int
    activations: int
    sweeps: int
    nash_ok: bool
    worst_deviation: float
    joint: JointAction
    graph: FogGraph
    demand: np.ndarray


def nash_certificate(graph, joint, demand, weights, costs, eps_switch,
                     catalog_size) -> tuple[bool, float]:
    """Exhaustively check that no agent has an improving full-neighborhood
    deviation beyond the hysteresis threshold."""
    value, _, _ = evaluate_detailed(graph, joint, demand, weights, costs)
    phi = value.scalar
    worst = 0.0
    for i in graph.alive_nodes():
        for cand in move_neighborhood(graph, joint, i, catalog_size)[1:]:
            delta = utility_oracle(graph, joint, demand, weights, costs, i,
                                   cand, phi)
            worst = min(worst, delta)
    return worst >= -eps_switch, worst


def frozen_descent(graph, joint, demand, weights, costs, agent_cfg: AgentConfig,
                   rng: np.random.Generator, catalog_size: int,
                   max_activations: int = 100_000):
    """Asynchronous oracle best response until one full sweep accepts
    nothing.  Returns (phi trajectory, accepted, activations, sweeps)."""
    value, _, _ = evaluate_detailed(graph, joint, demand, weights, costs)
    phi = value.scalar
    traj = [phi]
    agents = {i: FogAgent(i, agent_cfg) for i in graph.alive_nodes()}
    accepted = activations = sweeps = 0
    while True:
        perm = [graph.alive_nodes()[k]
                for k in rng.permutation(len(graph.alive_nodes()))]
        moved = False
        for node in perm:
            activations += 1
            if activations > max_activations:
                raise ConvergenceBudgetExceeded(
                    f"no fixed point within {max_activations} activations")
            act, delta = agents[node].best_response_oracle(
                graph, joint, demand, weights, costs, catalog_size,
                current_phi=phi)
            if act != joint[node]:
                if delta >= -agent_cfg.eps_switch:
                    raise EngineError("accepted move without improvement")
                joint[node] = act
                phi += delta
                traj.append(phi)
                accepted += 1
                moved = True
        sweeps += 1
        if not moved:
            break
    # guard against drift in the incremental potential bookkeeping
    value, _, _ = evaluate_detailed(graph, joint, demand, weights, costs)
    if abs(value.scalar - phi) > 1e-6:
        raise EngineError("potential bookkeeping drifted")
    traj[-1] = value.scalar
    return traj, accepted, activations, sweeps


def run_frozen(scenario: Scenario, max_activations: int = 100_000,
               graph: FogGraph | None = None, joint: JointAction | None = None,
               ) -> ConvergenceReport:
    """Oracle best-response dynamics on a frozen demand snapshot."""
    cfg = scenario.cfg
    catalog_size = cfg["workload"]["catalog"]["size"]
    if graph is None:
        graph = scenario.build_graph()
    profile = scenario.build_profile()
    demand = demand_snapshot(profile, 0, graph.alive_nodes())
    if joint is None:
        joint = random_joint(graph, catalog_size, scenario.rng("init"))
    weights, costs = scenario.weights(), scenario.costs()
    agent_cfg = scenario.agent_config()
    traj, accepted, activations, sweeps = frozen_descent(
        graph, joint, demand, weights, costs, agent_cfg,
        scenario.rng("activation"), catalog_size, max_activations)
    ok, worst = nash_certificate(graph, joint, demand, weights, costs,
                                 agent_cfg.eps_switch, catalog_size)
    return ConvergenceReport(traj, accepted, activations, sweeps, ok, worst,
                             joint, graph, demand)


def verify_exact_potential(scenario: Scenario, trials: int = 1000) -> dict:
    """Assert |delta Phi - delta u_i| over random unilateral deviations on a
    frozen snapshot; both sides evaluated through the full objective."""
    cfg = scenario.cfg
    catalog_size = cfg["workload"]["catalog"]["size"]
    graph = scenario.build_graph()
    profile = scenario.build_profile()
    demand = demand_snapshot(profile, 0, graph.alive_nodes())
    weights, costs = scenario.weights(), scenario.costs()
    rng = scenario.rng("init")
    joint = random_joint(graph, catalog_size, rng)
    alive = graph.alive_nodes()
    max_residual = 0.0
    for _ in range(trials):
        node = alive[int(rng.integers(len(alive)))]
        cands = move_neighborhood(graph, joint, node, catalog_size)
        cand = cands[int(rng.integers(len(cands)))]
        v0, _, _ = evaluate_detailed(graph, joint, demand, weights, costs)
        trial_joint = dict(joint)
        trial_joint[node] = cand
        v1, _, _ = evaluate_detailed(graph, trial_joint, demand, weights, costs)
        d_phi = v1.scalar - v0.scalar
        d_u = utility_oracle(graph, joint, demand, weights, costs, node, cand,
                             current_phi=v0.scalar)
        max_residual = max(max_residual, abs(d_phi - d_u))
        # drift the profile so trials cover varied states
        if rng.random() < 0.5:
            joint[node] = cand
    return {"trials": trials, "max_residual": max_residual,
            "ok": max_residual < 1e-9}


# ---------------------------------------------------------------------------
# Timed run
# ---------------------------------------------------------------------------

@dataclass
class RunReport:
    scenario_hash: str
    controller: str
    seed: int
    horizon: int
    phi: np.ndarray              # per slot, base weights
    latency: np.ndarray          # per slot mean measured request latency
    arrivals: np.ndarray         # per slot request count
    msgs_p2p: int = 0
    msgs_mem: int = 0
    msgs_ilp: int = 0
    accepted_moves: int = 0
    activations: int = 0
    last_accepted_slot: int = -1
    last_accepted_activation: int = -1
    events: list = field(default_factory=list)
    warmup: int = 0

    @property
    def phi_final(self) -> float:
        return float(self.phi[-1]) if len(self.phi) else float("nan")


def _nearest_source(graph: FogGraph, joint: JointAction, content: int,
                    node: int) -> int:
    """Closest alive node caching `content`, or CLOUD."""
    best, best_d = CLOUD, float("inf")
    for j in graph.alive_nodes():
        if j != node and content in joint[j].cache_set:
            d = topology.path_delay(graph, j, node)
            if d < best_d:
                best, best_d = j, d
    return best if best_d < float("inf") else CLOUD


def _apply_action_change(graph, joint, node, new_action, slot) -> bool:
    """Route an accepted decision through the execution layer.  Evictions
    are local; additions are replicate tasks from the nearest replica (or
    the cloud).  On any failure the node's previous action is restored."""
    cur = joint[node]
    added = new_action.cache_set - cur.cache_set
    joint[node] = NodeAction(cur.cache_set - (cur.cache_set - new_action.cache_set),
                             new_action.forward_to)
    for c in sorted(added):
        src = _nearest_source(graph, joint, c, node)
        status = execute(graph, joint, Task("replicate", src, c, node, slot))
        if not status.success:
            joint[node] = cur
            return False
    return True


def run(scenario: Scenario, max_activations: int | None = None) -> RunReport:
    cfg = scenario.cfg
    controller = cfg["controller"]
    horizon = cfg["horizon"]
    catalog_size = cfg["workload"]["catalog"]["size"]
    graph = scenario.build_graph()
    profile = scenario.build_profile()
    weights, costs = scenario.weights(), scenario.costs()
    agent_cfg = scenario.agent_config()
    coord_cfg = scenario.coordination_config()
    orch_cfg = scenario.orchestrator_config()
    mem = SharedMemory(cfg["memory"]["episodes"], cfg["memory"]["demand_window"],
                       cfg["memory"]["staleness"])

    rng_act = scenario.rng("activation")
    rng_work = scenario.rng("workload")
    rng_expl = scenario.rng("exploration")
    rng_fail = scenario.rng("failures")

    joint = random_joint(graph, catalog_size, scenario.rng("init"))
    agents = {i: FogAgent(i, agent_cfg) for i in graph.alive_nodes()}

    report = RunReport(scenario.hash(), controller, scenario.seed, horizon,
                       phi=np.zeros(horizon), latency=np.zeros(horizon),
                       arrivals=np.zeros(horizon, dtype=int),
                       warmup=horizon // 10)

    failure_plan: dict[int, list[int]] = {}
    fails = cfg["failures"]
    if fails and "plan" in fails:
        for slot, node in fails["plan"]:
            failure_plan.setdefault(slot, []).append(node)
    failure_rate = fails.get("rate", 0.0) if fails else 0.0

    eff_weights = weights
    ilp_cfg = cfg["baselines"]
    prev_contribs: dict[int, float] = {}
    pending: list[tuple[int, tuple, tuple]] = []  # (node, context, class)
    comp_sums = {"latency": 0.0, "cost": 0.0, "risk": 0.0}
    util_sum = 0.0
    comp_count = 0
    digest_batch: dict[int, float] = {}

    for t in range(horizon):
        # scheduled / random failures take effect at the top of the slot
        doomed = list(failure_plan.get(t, []))
        if failure_rate > 0:
            for i in list(graph.alive_nodes()):
                if rng_fail.random() < failure_rate:
                    doomed.append(i)
        for i in doomed:
            if graph.is_alive(i) and len(graph.alive_nodes()) > 1:
                fail_node(graph, i)
                joint.pop(i, None)
                agents.pop(i, None)
                pending = [p for p in pending if p[0] != i]
                report.events.append({"slot": t, "event": "failure", "node": i,
                                      "connected": is_connected(graph)})

        alive = graph.alive_nodes()
        demand = demand_snapshot(profile, t, alive)
        value, contribs, detail = evaluate_detailed(graph, joint, demand,
                                                    weights, costs)
        report.phi[t] = value.scalar
        contrib_now = {c.node: c.weighted(weights) for c in contribs}
        util_now = dict(zip(alive, detail.utilization))

        # resolve outcomes of last slot's executed actions
        for node, ctx, cls in pending:
            if node in agents and node in prev_contribs:
                delta = contrib_now[node] - prev_contribs[node]
                agents[node].record_outcome(ctx, cls, delta, t, mem)
        pending = []
        prev_contribs = contrib_now

        comp_sums["latency"] += weights.alpha * value.L
        comp_sums["cost"] += weights.beta * value.C
        comp_sums["risk"] += weights.gamma * value.R
        util_sum += float(detail.utilization.mean()) if alive else 0.0
        comp_count += 1

        # workload injection; measured latency uses the slot-start profile
        lat_sum = 0.0
        count = 0
        for k, i in enumerate(alive):
            reqs = sample_arrivals(profile, i, t, rng_work)
            for r in reqs:
                lat_sum += detail.latency[k, r.content]
                count += 1
            digest_batch[i] = digest_batch.get(i, 0.0) + len(reqs)
        report.arrivals[t] = count
        report.latency[t] = lat_sum / count if count else value.L

        # controller phase
        if controller == "agentic":
            perm = [alive[k] for k in rng_act.permutation(len(alive))]
            for node in perm:
                report.activations += 1
                state = observe(graph, joint, demand, node,
                                util_now.get(node, 0.0))
                if agent_cfg.mode == "oracle":
                    act, _ = agents[node].best_response_oracle(
                        graph, joint, demand, eff_weights, costs, catalog_size)
                    cls = ("oracle",)
                else:
                    view = mem.read(node, t)
                    act, cls = agents[node].best_response_estimated(
                        graph, joint, state, view, catalog_size, rng_expl)
                if act != joint[node]:
                    if _apply_action_change(graph, joint, node, act, t):
                        report.accepted_moves += 1
                        report.last_accepted_slot = t
                        report.last_accepted_activation = report.activations
                        ctx = context_key(state, graph)
                        pending.append((node, ctx, cls))
                    else:
                        report.events.append({"slot": t, "event": "exec_failure",
                                              "node": node})

            if coord_cfg.tau and t > 0 and t % coord_cfg.tau == 0:
                _coordination_round(graph, joint, demand, eff_weights, costs,
                                    coord_cfg, report, t)
                # batched demand-digest write piggybacks on the round
                mem.record_demand(t, digest_batch)
                digest_batch = {}
                mem.update_topology(TopologySummary(
                    tuple(alive), {i: graph.degree(i) for i in alive}, t))

            if orch_cfg.enabled and orch_cfg.period and t % orch_cfg.period == 0:
                means = {k: v / max(1, comp_count) for k, v in comp_sums.items()}
                guidance = orchestrate(means, util_sum / max(1, comp_count),
                                       weights, orch_cfg)
                mem.publish_guidance(guidance, t)
                eff_weights = guidance.effective
                comp_sums = {k: 0.0 for k in comp_sums}
                util_sum = 0.0
                comp_count = 0

        elif controller == "greedy":
            perm = [alive[k] for k in rng_act.permutation(len(alive))]
            for node in perm:
                report.activations += 1
                act = baselines.greedy_step(graph, joint, demand, node, detail)
                if act != joint[node]:
                    if _apply_action_change(graph, joint, node, act, t):
                        report.accepted_moves += 1
                        report.last_accepted_slot = t
                        report.last_accepted_activation = report.activations

        elif controller == "ilp":
            period = ilp_cfg["ilp_period"]
            if t % period == 0:
                instance = IlpInstance(graph, demand, weights, costs,
                                       catalog_size)
                count = instance.joint_count()
                if (ilp_cfg["solver"] == "exhaustive" and count <= 1_000_000
                        and len(alive) <= ilp_cfg["exhaustive_max_nodes"]):
                    sol = solve_ilp(instance, "exhaustive")
                else:
                    if count > 5_000_000:
                        instance.actions = baselines.restricted_actions(
                            graph, demand, catalog_size)
                    sol = solve_ilp(instance, "branch_and_bound",
                                    budget=ilp_cfg["budget"])
                joint.clear()
                joint.update(sol.joint)
                report.msgs_ilp += 2 * len(alive)
                report.events.append({"slot": t, "event": "ilp_solve",
                                      "objective": sol.objective,
                                      "optimal": sol.optimal})

    report.msgs_mem = mem.write_count
    return report


def _coordination_round(graph, joint, demand, weights, costs, coord_cfg,
                        report: RunReport, t: int):
    alive = graph.alive_nodes()
    value, _, detail = evaluate_detailed(graph, joint, demand, weights, costs)
    utils = dict(zip(alive, (float(u) for u in detail.utilization)))
    summaries = {i: coord.make_summary(graph, joint, i, utils[i], t)
                 for i in alive}
    report.msgs_p2p += 2 * graph.num_alive_links()

    conflicts: dict[tuple, coord.ConflictReport] = {}
    for i in alive:
        received = [summaries[j] for j in graph.neighbors(i)]
        for rep in coord.detect_conflicts(graph, summaries[i], received,
                                          demand, alive, costs.rho_max,
                                          coord_cfg.overload_margin, utils):
            conflicts.setdefault((rep.pair, rep.kind), rep)

    changed: set[int] = set()
    processed = 0
    phi = value.scalar
    for key in sorted(conflicts, key=lambda k: (k[0], k[1])):
        if processed >= coord_cfg.max_pairs_per_round:
            break
        rep = conflicts[key]
        i, j = rep.pair
        if i in changed or j in changed:
            continue
        ai, aj, delta = coord.negotiate(graph, joint, rep, demand, weights,
                                        costs, coord_cfg.eps_switch, phi)
        processed += 1
        if ai is None and aj is None:
            continue
        for node, act in ((i, ai), (j, aj)):
            if act is not None:
                if _apply_action_change(graph, joint, node, act, t):
                    changed.add(node)
        phi += delta
        report.events.append({"slot": t, "event": "negotiation",
                              "pair": [i, j], "kind": rep.kind,
                              "delta": delta})
