"""Comparison controllers: uncoordinated greedy, and a periodic centralized
solver over global snapshots.

Greedy minimizes each node's own latency share over its move neighborhood,
ignoring cost, risk, other nodes, and shared memory.  The centralized
baseline snapshots the full system state and solves for the joint action
minimizing the global objective: exhaustively on tiny instances, by depth
first branch and bound otherwise (with an additive lower bound from
relaxing the cache-placement coupling).  Branch and bound is exact whenever
it runs the full action space within budget; otherwise it returns the best
incumbent flagged as not proven optimal.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from fogsim.topology import CLOUD, FogGraph, path_delay
from fogsim.objective import (CostModel, JointAction, NodeAction,
                              ObjectiveWeights, EvalDetail, evaluate_detailed)


# ---------------------------------------------------------------------------
# Greedy
# ---------------------------------------------------------------------------

def greedy_step(graph: FogGraph, joint: JointAction, demand: np.ndarray,
                node: int, detail: EvalDetail | None = None,
                tol: float = 1e-9) -> NodeAction:
    """Argmin of the node's own latency share over its move neighborhood.

    Works from a local view only: own demand and load, plus each neighbor's
    advertised cache, load, and link delay.  A forwarded request is assumed
    served at the target if the target caches it and to fall through to the
    cloud otherwise; deeper chains are invisible to a myopic local
    controller.  Ties break keep-current first, then lexicographically.
    """
    if detail is None:
        _, _, detail = evaluate_detailed(graph, joint, demand,
                                         ObjectiveWeights(1, 0, 0), CostModel())
    ids = detail.node_ids
    k = ids.index(node)
    row = demand[k]
    n_contents = demand.shape[1]
    spec = graph.nodes[node]
    cur = joint[node]
    hit = spec.proc_delay * (1.0 + detail.utilization[k])

    # Miss-latency vector for each forwarding option, under the current
    # global routing state.
    miss: dict[int, np.ndarray] = {CLOUD: np.full(n_contents, graph.cloud_delay)}
    for t in graph.neighbors(node):
        if joint.get(t) is None:
            continue
        t_spec = graph.nodes[t]
        t_hit = t_spec.proc_delay * (1.0 + detail.utilization[ids.index(t)])
        served = np.isin(np.arange(n_contents), list(joint[t].cache_set))
        miss[t] = graph.adj[node][t] + np.where(served, t_hit,
                                                graph.cloud_delay)

    def score(cache: frozenset, fwd: int) -> float:
        lat = np.where(np.isin(np.arange(n_contents), list(cache)),
                       hit, miss[fwd])
        return float(row @ lat)

    # a forward target that has died behaves like the cloud fallback
    fwd0 = cur.forward_to if cur.forward_to in miss else CLOUD
    gain0 = row * (miss[fwd0] - hit)             # per-content saving if cached
    keep_score = score(cur.cache_set, fwd0)

    cands: list[tuple[float, NodeAction]] = []
    cached = sorted(cur.cache_set)
    uncached = np.array([c for c in range(n_contents) if c not in cur.cache_set])

    if len(cached) < spec.cache_capacity and len(uncached):
        g = gain0[uncached]
        c = int(uncached[int(np.argmax(g))])
        cands.append((keep_score - float(gain0[c]),
                      NodeAction(cur.cache_set | {c}, cur.forward_to)))
    if cached:
        desc = sorted(cached, reverse=True)
        e = min(desc, key=lambda c: (gain0[c],))  # first occurrence: largest id
        cands.append((keep_score + float(gain0[e]),
                      NodeAction(cur.cache_set - {e}, cur.forward_to)))
        if len(uncached):
            g = gain0[uncached]
            c = int(uncached[int(np.argmax(g))])
            if c != e:
                cands.append((keep_score - float(gain0[c]) + float(gain0[e]),
                              NodeAction((cur.cache_set - {e}) | {c},
                                         cur.forward_to)))
    for t in list(graph.neighbors(node)) + [CLOUD]:
        if t != cur.forward_to:
            cands.append((score(cur.cache_set, t), NodeAction(cur.cache_set, t)))

    best_score, best = keep_score, cur
    for s, act in sorted(cands, key=lambda x: (x[0], x[1].sort_key())):
        if s < best_score - tol:
            best_score, best = s, act
            break
    return best


def greedy_score(graph: FogGraph, joint: JointAction, demand: np.ndarray,
                 node: int, action: NodeAction,
                 detail: EvalDetail | None = None) -> float:
    """The myopic local-view latency score greedy_step minimizes (test
    oracle): misses are served by the forward target if its cache holds the
    content and by the cloud otherwise."""
    if detail is None:
        _, _, detail = evaluate_detailed(graph, joint, demand,
                                         ObjectiveWeights(1, 0, 0), CostModel())
    ids = detail.node_ids
    k = ids.index(node)
    row = demand[k]
    hit = graph.nodes[node].proc_delay * (1.0 + detail.utilization[k])
    total = 0.0
    for c in range(demand.shape[1]):
        t = action.forward_to
        if c in action.cache_set:
            lat = hit
        elif t == CLOUD or t not in graph.adj[node] or joint.get(t) is None:
            lat = graph.cloud_delay
        elif c in joint[t].cache_set:
            t_hit = graph.nodes[t].proc_delay * (1.0 + detail.utilization[ids.index(t)])
            lat = graph.adj[node][t] + t_hit
        else:
            lat = graph.adj[node][t] + graph.cloud_delay
        total += row[c] * lat
    return float(total)


# ---------------------------------------------------------------------------
# Centralized solver
# ---------------------------------------------------------------------------

@dataclass
class IlpInstance:
    graph: FogGraph
    demand: np.ndarray
    weights: ObjectiveWeights
    costs: CostModel
    catalog_size: int
    # optional restriction of each node's candidate actions (heuristic mode)
    actions: dict[int, list[NodeAction]] = field(default_factory=dict)

    def node_actions(self, node: int) -> list[NodeAction]:
        if node in self.actions:
            return self.actions[node]
        return enumerate_node_actions(self.graph, node, self.catalog_size)

    def node_action_count(self, node: int) -> int:
        """len(node_actions(node)) without materializing the list."""
        if node in self.actions:
            return len(self.actions[node])
        cap = min(self.graph.nodes[node].cache_capacity, self.catalog_size)
        subsets = sum(math.comb(self.catalog_size, s) for s in range(cap + 1))
        return subsets * (len(self.graph.neighbors(node)) + 1)

    def joint_count(self) -> int:
        total = 1
        for i in self.graph.alive_nodes():
            total *= self.node_action_count(i)
        return total


@dataclass
class IlpSolution:
    joint: JointAction
    objective: float
    optimal: bool
    explored: int


def enumerate_node_actions(graph: FogGraph, node: int,
                           catalog_size: int) -> list[NodeAction]:
    """All feasible (cache subset, forwarding target) pairs, sorted."""
    cap = graph.nodes[node].cache_capacity
    targets = graph.neighbors(node) + [CLOUD]
    out = []
    for size in range(min(cap, catalog_size) + 1):
        for combo in itertools.combinations(range(catalog_size), size):
            for t in targets:
                out.append(NodeAction(frozenset(combo), t))
    out.sort(key=NodeAction.sort_key)
    return out


def heuristic_joint(graph: FogGraph, demand: np.ndarray,
                    catalog_size: int) -> JointAction:
    """Constructive start: cache the locally hottest contents, forward to the
    closest neighbor."""
    alive = graph.alive_nodes()
    joint = {}
    for k, i in enumerate(alive):
        cap = graph.nodes[i].cache_capacity
        top = np.argsort(-demand[k], kind="stable")[:cap]
        nbrs = graph.neighbors(i)
        fwd = min(nbrs, key=lambda j: (graph.adj[i][j], j)) if nbrs else CLOUD
        joint[i] = NodeAction(frozenset(int(c) for c in top), fwd)
    return joint


def restricted_actions(graph: FogGraph, demand: np.ndarray, catalog_size: int,
                       per_node: int = 12) -> dict[int, list[NodeAction]]:
    """Small per-node candidate lists for large instances: variations around
    the locally hottest cache set, crossed with all forwarding targets."""
    alive = graph.alive_nodes()
    out = {}
    for k, i in enumerate(alive):
        cap = graph.nodes[i].cache_capacity
        order = [int(c) for c in np.argsort(-demand[k], kind="stable")]
        cache_sets = []
        base = frozenset(order[:cap])
        cache_sets.append(base)
        if cap >= 1:
            cache_sets.append(frozenset(order[1:cap + 1]))
            cache_sets.append(frozenset(order[:max(0, cap - 1)]))
        seen = []
        for cs in cache_sets:
            if cs not in seen:
                seen.append(cs)
        targets = graph.neighbors(i) + [CLOUD]
        acts = [NodeAction(cs, t) for cs in seen for t in targets]
        acts.sort(key=NodeAction.sort_key)
        out[i] = acts[:per_node]
    return out


def _latency_bounds(instance: IlpInstance) -> tuple[np.ndarray, np.ndarray]:
    """Per-node lower bounds on serve latency: (hit-or-better, miss-or-better).

    Any serve at node s costs at least proc_s (load factor >= 1) after at
    least the shortest-path delay; the cloud costs at least cloud_delay.
    """
    g = instance.graph
    alive = g.alive_nodes()
    procs = {i: g.nodes[i].proc_delay for i in alive}
    lb_miss = np.zeros(len(alive))
    lb_any = np.zeros(len(alive))
    for k, i in enumerate(alive):
        best = g.cloud_delay
        for s in alive:
            if s == i:
                continue
            d = path_delay(g, i, s)
            if d + procs[s] < best:
                best = d + procs[s]
        lb_miss[k] = best
        lb_any[k] = min(procs[i], best)
    return lb_any, lb_miss


def solve_ilp(instance: IlpInstance, method: str = "branch_and_bound",
              budget: int = 500_000) -> IlpSolution:
    """Minimize the global objective over all feasible joint actions."""
    if method == "exhaustive":
        return _solve_exhaustive(instance)
    if method == "branch_and_bound":
        return _solve_bnb(instance, budget)
    raise ValueError(f"unknown method {method!r}")


def _objective(instance: IlpInstance, joint: JointAction) -> float:
    value, _, _ = evaluate_detailed(instance.graph, joint, instance.demand,
                                    instance.weights, instance.costs)
    return value.scalar


def _solve_exhaustive(instance: IlpInstance) -> IlpSolution:
    if instance.joint_count() > 1_000_000:
        raise ValueError("instance too large for exhaustive search")
    alive = instance.graph.alive_nodes()
    lists = [instance.node_actions(i) for i in alive]
    best, best_obj, explored = None, float("inf"), 0
    for combo in itertools.product(*lists):
        joint = dict(zip(alive, combo))
        obj = _objective(instance, joint)
        explored += 1
        if obj < best_obj:
            best_obj, best = obj, joint
    return IlpSolution(best, best_obj, True, explored)


def _solve_bnb(instance: IlpInstance, budget: int) -> IlpSolution:
    g = instance.graph
    alive = g.alive_nodes()
    n = len(alive)
    demand = instance.demand
    total_rate = float(demand.sum())
    w, costs = instance.weights, instance.costs
    lb_any, lb_miss = _latency_bounds(instance)
    procs = np.array([g.nodes[i].proc_delay for i in alive])

    # Per-(node, action) contribution lower bound: latency share with all
    # cross-node coupling relaxed, plus the definite storage cost.
    def action_lb(k: int, act: NodeAction) -> float:
        if total_rate > 0:
            per = np.where(np.isin(np.arange(instance.catalog_size),
                                   list(act.cache_set)),
                           procs[k], lb_miss[k])
            lat = float(demand[k] @ per) / total_rate
        else:
            lat = 0.0
        return w.alpha * lat + w.beta * costs.c_store * len(act.cache_set)

    free_lb = np.array([
        w.alpha * float(demand[k].sum()) * lb_any[k] / total_rate
        if total_rate > 0 else 0.0
        for k in range(n)])
    suffix_lb = np.concatenate([np.cumsum(free_lb[::-1])[::-1], [0.0]])

    lists = []
    for k, i in enumerate(alive):
        acts = instance.node_actions(i)
        scored = [(action_lb(k, a), a) for a in acts]
        scored.sort(key=lambda x: (x[0], x[1].sort_key()))
        lists.append(scored)

    incumbent = heuristic_joint(g, demand, instance.catalog_size)
    incumbent_obj = _objective(instance, incumbent)
    explored = 0
    exhausted = False
    partial: list[NodeAction] = []
    partial_lb = [0.0]

    def dfs(depth: int):
        nonlocal incumbent, incumbent_obj, explored, exhausted
        if exhausted:
            return
        if depth == n:
            joint = dict(zip(alive, partial))
            obj = _objective(instance, joint)
            explored += 1
            if obj < incumbent_obj:
                incumbent_obj, incumbent = obj, joint
            return
        for lb_a, act in lists[depth]:
            explored += 1
            if explored > budget:
                exhausted = True
                return
            lb = partial_lb[-1] + lb_a + suffix_lb[depth + 1]
            if lb >= incumbent_obj:
                continue
            partial.append(act)
            partial_lb.append(partial_lb[-1] + lb_a)
            dfs(depth + 1)
            partial.pop()
            partial_lb.pop()
            if exhausted:
                return

    dfs(0)
    restricted = any(i in instance.actions for i in alive)
    return IlpSolution(incumbent, incumbent_obj,
                       optimal=not exhausted and not restricted,
                       explored=explored)
