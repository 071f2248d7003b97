"""Pairwise peer coordination between neighboring fog agents.

Every coordination round (period tau) neighbors swap state summaries, look
for conflicts (overload imbalance, redundant replication, contention on a
shared forwarding target), and negotiate a joint two-node move that lowers
the potential; "keep current" always wins unless the pair move beats the
hysteresis threshold.  Each summary exchange between a pair costs 2
messages, one per direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fogsim.topology import CLOUD, FogGraph
from fogsim.objective import (CostModel, JointAction, NodeAction,
                              ObjectiveWeights, evaluate_detailed)


@dataclass(frozen=True)
class StateSummary:
    node: int
    utilization: float
    cache_digest: frozenset[int]
    forward_intent: int
    slot: int


@dataclass(frozen=True)
class ConflictReport:
    pair: tuple[int, int]   # (min id, max id)
    kind: str               # overload | redundant_replication | contention
    evidence: tuple


@dataclass
class CoordinationConfig:
    tau: int = 20
    overload_margin: float = 0.1
    max_pairs_per_round: int = 5
    eps_switch: float = 1e-4


def make_summary(graph: FogGraph, joint: JointAction, node: int,
                 utilization: float, slot: int) -> StateSummary:
    act = joint[node]
    return StateSummary(node, float(utilization), act.cache_set,
                        act.forward_to, slot)


def exchange(graph: FogGraph, summaries: dict[int, StateSummary],
             node: int) -> tuple[list[StateSummary], int]:
    """Summaries received from alive neighbors, plus messages this node
    accounts for (2 per neighbor exchange)."""
    received = [summaries[j] for j in graph.neighbors(node)]
    return received, 2 * len(received)


def detect_conflicts(graph: FogGraph, mine: StateSummary,
                     neighbors: list[StateSummary],
                     demand: np.ndarray, node_ids: list[int],
                     rho_max: float, margin: float,
                     utils: dict[int, float] | None = None) -> list[ConflictReport]:
    utils = utils or {}
    out = []
    i = mine.node
    my_row = demand[node_ids.index(i)]
    for summ in neighbors:
        j = summ.node
        pair = (min(i, j), max(i, j))
        if summ.utilization > rho_max and mine.utilization < rho_max - margin:
            out.append(ConflictReport(pair, "overload",
                                      (j, round(summ.utilization, 6))))
        shared = mine.cache_digest & summ.cache_digest
        if shared:
            row_j = demand[node_ids.index(j)]
            # flag the replica the pair can most plausibly spare
            c = min(shared, key=lambda x: (float(my_row[x] + row_j[x]), x))
            combined = float(my_row[c] + row_j[c])
            cap = min(graph.nodes[i].compute_capacity,
                      graph.nodes[j].compute_capacity)
            if combined <= 0.5 * rho_max * cap:
                out.append(ConflictReport(pair, "redundant_replication",
                                          (c, round(combined, 6))))
        k = mine.forward_intent
        if (k == summ.forward_intent and k != CLOUD and graph.is_alive(k)
                and utils.get(k, 0.0) > rho_max):
            out.append(ConflictReport(pair, "contention",
                                      (k, round(utils[k], 6))))
    return out


def _conflict_moves(graph: FogGraph, joint: JointAction, report: ConflictReport,
                    demand: np.ndarray, node_ids: list[int],
                    ) -> tuple[list[NodeAction], list[NodeAction]]:
    """Conflict-relevant candidate moves for each party (keep always first)."""
    i, j = report.pair
    ai, aj = joint[i], joint[j]
    mi, mj = [ai], [aj]

    if report.kind == "redundant_replication":
        # one party may free its duplicate replica: plain drop, drop with a
        # retarget at the keeper, or a swap for content the pair lacks
        c = report.evidence[0]
        n_contents = demand.shape[1]
        union = ai.cache_set | aj.cache_set
        for node, moves in ((i, mi), (j, mj)):
            act = joint[node]
            if c not in act.cache_set:
                continue
            peer = j if node == i else i
            row = demand[node_ids.index(node)]
            dropped = act.cache_set - {c}
            moves.append(NodeAction(dropped, act.forward_to))
            absent = [x for x in range(n_contents) if x not in union]
            if absent:
                best = max(absent, key=lambda x: (row[x], -x))
                moves.append(NodeAction(dropped | {best}, act.forward_to))
            if act.forward_to != peer and peer in graph.adj[node]:
                moves.append(NodeAction(dropped, peer))
                if absent:
                    moves.append(NodeAction(dropped | {best}, peer))
    elif report.kind == "overload":
        hot = report.evidence[0]          # the overloaded party
        cold = j if hot == i else i
        ah, ac = joint[hot], joint[cold]
        mh = [ah]
        if ac is not None and ah.forward_to != cold:
            mh.append(NodeAction(ah.cache_set, cold))
        mc = [ac]
        row_h = demand[node_ids.index(hot)]
        spill = [c for c in sorted(ah.cache_set) if c not in ac.cache_set]
        if spill and len(ac.cache_set) < graph.nodes[cold].cache_capacity:
            c = max(spill, key=lambda c: (row_h[c], -c))
            mc.append(NodeAction(ac.cache_set | {c}, ac.forward_to))
        mi, mj = (mh, mc) if hot == i else (mc, mh)
    elif report.kind == "contention":
        for node, moves in ((i, mi), (j, mj)):
            cur = joint[node]
            for t in graph.neighbors(node) + [CLOUD]:
                if t != cur.forward_to and t != node:
                    moves.append(NodeAction(cur.cache_set, t))
    return mi, mj


def negotiate(graph: FogGraph, joint: JointAction, report: ConflictReport,
              demand: np.ndarray, weights: ObjectiveWeights, costs: CostModel,
              eps_switch: float, current_phi: float | None = None,
              ) -> tuple[NodeAction | None, NodeAction | None, float]:
    """Enumerate the conflict-relevant pair moves, pick the potential
    minimizer, apply only if it beats eps_switch.

    Returns (new action for i or None, new action for j or None, delta).
    """
    i, j = report.pair
    if current_phi is None:
        value, _, _ = evaluate_detailed(graph, joint, demand, weights, costs)
        current_phi = value.scalar
    node_ids = graph.alive_nodes()
    mi, mj = _conflict_moves(graph, joint, report, demand, node_ids)
    best = (None, None)
    best_delta = 0.0
    for ci in mi:
        for cj in mj:
            if ci == joint[i] and cj == joint[j]:
                continue
            trial = dict(joint)
            trial[i], trial[j] = ci, cj
            value, _, _ = evaluate_detailed(graph, trial, demand, weights, costs)
            delta = value.scalar - current_phi
            if delta < best_delta:
                best_delta = delta
                best = (ci if ci != joint[i] else None,
                        cj if cj != joint[j] else None)
    if best_delta < -eps_switch:
        return best[0], best[1], best_delta
    return None, None, 0.0
