"""Fog agents: observation, marginal-contribution utilities, best response.

Two utility modes:
  * oracle    - the exact potential difference of a unilateral deviation,
                used for theorem verification and as estimator ground truth;
  * estimated - empirical mean of observed local-contribution deltas,
                conditioned on a discretized context and an action class,
                merged (count-weighted) from local and shared memory.

Bounded rationality = best response restricted to a move neighborhood
(keep / add one / evict one / swap one / retarget forwarding) plus a
switching hysteresis eps_switch; ties break keep-current first, then by the
lexicographic order of the candidate action.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from fogsim.topology import CLOUD, FogGraph
from fogsim.objective import (CostModel, JointAction, NodeAction,
                              ObjectiveWeights, evaluate_detailed)


@dataclass
class AgentConfig:
    mode: str = "estimated"          # "oracle" | "estimated"
    eps_switch: float = 1e-4
    eps_explore: float = 0.05
    prior: float = -0.01             # optimistic prior for unseen pairs
    full_enumeration: bool = True    # oracle mode: full move neighborhood
    local_memory_cap: int = 50       # samples kept per (context, class)


@dataclass(frozen=True)
class LocalState:
    node: int
    queue_proxy: float                  # expected load incl. routed inflow
    cache_set: frozenset[int]
    neighbor_status: dict[int, tuple[bool, float]]  # j -> (alive, link delay)
    action: NodeAction
    demand_row: np.ndarray              # own expected per-content rates
    utilization: float


class LocalMemory:
    """The agent's own recent episodes, bucketed by (context, action-class)
    with a bounded FIFO per bucket so stale observations of a situation age
    out as new ones arrive."""

    def __init__(self, cap: int = 50):
        self.cap = cap
        self.table: dict[tuple, deque] = {}

    def add(self, context: tuple, action_class: tuple, delta: float) -> None:
        key = (context, action_class)
        if key not in self.table:
            self.table[key] = deque(maxlen=self.cap)
        self.table[key].append(delta)

    def query(self, context: tuple, action_class: tuple):
        vals = self.table.get((context, action_class))
        if not vals:
            return None, 0
        return sum(vals) / len(vals), len(vals)


def observe(graph: FogGraph, joint: JointAction, demand: np.ndarray,
            node: int, utilization: float = 0.0) -> LocalState:
    """Build the local state from the node's own fields and its 1-hop
    neighborhood only."""
    if not graph.is_alive(node):
        raise ValueError(f"node {node} is dead")
    alive = graph.alive_nodes()
    row = demand[alive.index(node)]
    status = {}
    inbound = 0
    for j in sorted(graph.adj[node]):
        ok = graph.is_alive(j)
        status[j] = (ok, graph.adj[node][j])
        if ok and joint.get(j) is not None and joint[j].forward_to == node:
            inbound += 1
    queue_proxy = float(row.sum()) * (1.0 + inbound)
    return LocalState(node, queue_proxy, joint[node].cache_set, status,
                      joint[node], row, utilization)


def context_key(state: LocalState, graph: FogGraph) -> tuple:
    """(cache-coverage, cache-fullness, neighbor-liveness) buckets.

    Coverage is the fraction of the node's own demand its cache absorbs; it
    separates "my cache is useless" states from "my cache already fits",
    so deltas learned while the profile was poor do not keep firing after
    the cache has settled.  Fullness decides whether adds are even on the
    table; liveness re-opens learning after neighborhood failures.  All
    three are scale-invariant in the demand level: a uniform rate change
    leaves the key (and therefore everything learned) intact, so agents
    do not discard their policy when load rises proportionally.
    """
    total = float(state.demand_row.sum())
    hit = sum(float(state.demand_row[c]) for c in state.cache_set)
    coverage = hit / total if total > 0 else 0.0
    if coverage < 0.33:
        h = "low"
    elif coverage < 0.66:
        h = "med"
    else:
        h = "high"
    cap = graph.nodes[state.node].cache_capacity
    f = "full" if len(state.cache_set) >= cap else "open"
    alive = sum(1 for ok, _ in state.neighbor_status.values() if ok)
    n_links = len(state.neighbor_status) or 1
    a = "intact" if alive == n_links else "degraded"
    return (h, f, a)


def popularity_tier(content: int, catalog_size: int) -> int:
    """0 = most popular third (content id equals popularity rank - 1)."""
    return min(2, 3 * content // max(1, catalog_size))


def demand_tiers(demand_row: np.ndarray) -> np.ndarray:
    """Per-content popularity tier (0 hottest third .. 2 coldest) ranked by
    the node's own observed demand, so tiers follow popularity turnover.
    Ties resolve by content id."""
    n = len(demand_row)
    order = np.lexsort((np.arange(n), -demand_row))
    tiers = np.empty(n, dtype=int)
    for rank, c in enumerate(order):
        tiers[c] = min(2, 3 * rank // max(1, n))
    return tiers


def move_neighborhood(graph: FogGraph, joint: JointAction, node: int,
                      catalog_size: int) -> list[NodeAction]:
    """Every feasible single-move candidate; keep-current first, the rest in
    lexicographic order (the tie-break order for best response)."""
    cur = joint[node]
    cap = graph.nodes[node].cache_capacity
    cache = cur.cache_set
    uncached = [c for c in range(catalog_size) if c not in cache]
    out = []
    if len(cache) < cap:
        for c in uncached:
            out.append(NodeAction(cache | {c}, cur.forward_to))
    for c in sorted(cache):
        out.append(NodeAction(cache - {c}, cur.forward_to))
    for e in sorted(cache):
        for a in uncached:
            out.append(NodeAction((cache - {e}) | {a}, cur.forward_to))
    for t in graph.neighbors(node) + [CLOUD]:
        if t != cur.forward_to:
            out.append(NodeAction(cache, t))
    out.sort(key=NodeAction.sort_key)
    return [cur] + out


def action_class(graph: FogGraph, node: int, current: NodeAction,
                 candidate: NodeAction, catalog_size: int) -> tuple:
    """Bucketed descriptor used as the estimator key."""
    if candidate == current:
        return ("keep",)
    added = candidate.cache_set - current.cache_set
    removed = current.cache_set - candidate.cache_set
    if candidate.forward_to != current.forward_to:
        if candidate.forward_to == CLOUD:
            return ("fwd", "cloud")
        ranked = sorted(graph.neighbors(node),
                        key=lambda j: (graph.adj[node][j], j))
        return ("fwd", ranked.index(candidate.forward_to))
    if added and removed:
        return ("swap", popularity_tier(min(added), catalog_size))
    if added:
        return ("add", popularity_tier(min(added), catalog_size))
    return ("evict", popularity_tier(min(removed), catalog_size))


def class_candidates(graph: FogGraph, joint: JointAction, node: int,
                     demand_row: np.ndarray, catalog_size: int,
                     ) -> list[tuple[tuple, NodeAction]]:
    """One deterministic representative per action class.

    Representatives are picked by a 1-hop value proxy: the latency a local
    copy of content c would save, own demand times (estimated miss cost -
    hit cost), where the miss cost assumes the current forward target
    serves what its visible cache holds and everything else goes to the
    cloud.  Adds pick the highest-value uncached content of the tier,
    evicts drop the lowest-value cached one.

    Each class key carries a bucket of that proxy gain (per-request delay
    saved, log-spaced levels), so the learned statistics separate moves
    the local view already favors from speculative ones; without it
    near-zero-value churn and genuinely useful moves share one mean.

    Candidates after "keep" are ordered by descending proxy gain: when
    several classes share the same estimate (e.g. all unseen at the
    optimistic prior) the locally most promising move wins the tie, so an
    agent with an empty memory already acts on its 1-hop view and the
    learned means then veto or confirm with experience.
    """
    cur = joint[node]
    cap = graph.nodes[node].cache_capacity
    cache = cur.cache_set
    out = [(("keep",), cur)]

    hit = graph.nodes[node].proc_delay
    fwd = cur.forward_to
    if fwd in graph.adj[node] and graph.is_alive(fwd) and joint.get(fwd) is not None:
        link = graph.adj[node][fwd]
        fwd_cache = joint[fwd].cache_set
        fwd_proc = graph.nodes[fwd].proc_delay

        def miss_cost(c):
            return link + (fwd_proc if c in fwd_cache else graph.cloud_delay)
    else:
        def miss_cost(c):
            return graph.cloud_delay

    def value(c):
        return float(demand_row[c]) * (miss_cost(c) - hit)

    tiers = demand_tiers(demand_row)
    by_tier_uncached: dict[int, list[int]] = {}
    for c in range(catalog_size):
        if c not in cache:
            by_tier_uncached.setdefault(int(tiers[c]), []).append(c)

    def best(cands):
        return max(cands, key=lambda c: (value(c), -c))

    def worst(cands):
        return min(cands, key=lambda c: (value(c), c))

    row_sum = float(demand_row.sum()) or 1.0
    _EDGES = (20.0, 10.0, 5.0, 2.0, 0.5, 0.05)

    def bucket(gain):
        per_req = gain / row_sum
        for lvl, edge in enumerate(_EDGES):
            if per_req >= edge:
                return len(_EDGES) - lvl        # 6 = best .. 1
        return 0

    entries: list[tuple[float, tuple, NodeAction]] = []

    if len(cache) < cap:
        for tier in sorted(by_tier_uncached):
            c = best(by_tier_uncached[tier])
            g = value(c)
            entries.append((g, ("add", tier, bucket(g)),
                            NodeAction(cache | {c}, cur.forward_to)))
    if cache:
        by_tier_cached: dict[int, list[int]] = {}
        for c in cache:
            by_tier_cached.setdefault(int(tiers[c]), []).append(c)
        for tier in sorted(by_tier_cached):
            c = worst(by_tier_cached[tier])
            g = -value(c)
            entries.append((g, ("evict", tier, bucket(g)),
                            NodeAction(cache - {c}, cur.forward_to)))
        drop = worst(cache)
        for tier in sorted(by_tier_uncached):
            c = best(by_tier_uncached[tier])
            if c != drop:
                g = value(c) - value(drop)
                entries.append((g, ("swap", tier, bucket(g)),
                                NodeAction((cache - {drop}) | {c},
                                           cur.forward_to)))
    # forward targets ranked by the same 1-hop proxy applied to the missed
    # share of demand: link delay plus per-content service at the target
    missed = [c for c in range(catalog_size) if c not in cache]

    def fwd_miss_cost(j):
        if j == CLOUD:
            return sum(float(demand_row[c]) for c in missed) * graph.cloud_delay
        if not graph.is_alive(j) or joint.get(j) is None:
            return float("inf")
        link = graph.adj[node][j]
        proc = graph.nodes[j].proc_delay
        tcache = joint[j].cache_set
        return sum(float(demand_row[c])
                   * (link + (proc if c in tcache else graph.cloud_delay))
                   for c in missed)

    cur_cost = fwd_miss_cost(cur.forward_to if cur.forward_to in graph.adj[node]
                             else CLOUD)
    ranked = sorted(graph.neighbors(node), key=lambda j: (fwd_miss_cost(j), j))
    for r, j in enumerate(ranked):
        if j != cur.forward_to:
            g = cur_cost - fwd_miss_cost(j)
            entries.append((g, ("fwd", r, bucket(g)), NodeAction(cache, j)))
    if cur.forward_to != CLOUD:
        g = cur_cost - fwd_miss_cost(CLOUD)
        entries.append((g, ("fwd", "cloud", bucket(g)), NodeAction(cache, CLOUD)))

    entries.sort(key=lambda e: (-e[0], tuple(map(str, e[1]))))
    out.extend((cls, act) for _, cls, act in entries)
    return out


def utility_oracle(graph: FogGraph, joint: JointAction, demand: np.ndarray,
                   weights: ObjectiveWeights, costs: CostModel, node: int,
                   candidate: NodeAction, current_phi: float | None = None) -> float:
    """Potential difference of the unilateral deviation to `candidate`."""
    if current_phi is None:
        value, _, _ = evaluate_detailed(graph, joint, demand, weights, costs)
        current_phi = value.scalar
    if candidate == joint[node]:
        return 0.0
    trial = dict(joint)
    trial[node] = candidate
    value, _, _ = evaluate_detailed(graph, trial, demand, weights, costs)
    return value.scalar - current_phi


def utility_estimated(shared_view, local_mem: LocalMemory, agent: int,
                      context: tuple, act_class: tuple, prior: float) -> float:
    """Count-weighted merge of local and shared sample means; unseen pairs
    get the optimistic prior."""
    if act_class == ("keep",):
        return 0.0
    lm, ln = local_mem.query(context, act_class)
    sm, sn = shared_view.query_estimate(agent, context, act_class)
    if ln == 0 and sn == 0:
        return prior
    total = ln + sn
    acc = (lm * ln if ln else 0.0) + (sm * sn if sn else 0.0)
    return acc / total


@dataclass
class FogAgent:
    node: int
    config: AgentConfig
    local_memory: LocalMemory = field(default=None)

    def __post_init__(self):
        if self.local_memory is None:
            self.local_memory = LocalMemory(self.config.local_memory_cap)

    # -- oracle mode -----------------------------------------------------

    def best_response_oracle(self, graph, joint, demand, weights, costs,
                             catalog_size: int,
                             current_phi: float | None = None,
                             ) -> tuple[NodeAction, float]:
        """Argmin of the oracle utility over the move neighborhood; switches
        only when the improvement beats eps_switch."""
        if current_phi is None:
            value, _, _ = evaluate_detailed(graph, joint, demand, weights, costs)
            current_phi = value.scalar
        cands = move_neighborhood(graph, joint, node=self.node,
                                  catalog_size=catalog_size)
        best, best_delta = cands[0], 0.0
        for cand in cands[1:]:
            delta = utility_oracle(graph, joint, demand, weights, costs,
                                   self.node, cand, current_phi)
            if delta < best_delta:
                best, best_delta = cand, delta
        if best_delta < -self.config.eps_switch:
            return best, best_delta
        return joint[self.node], 0.0

    # -- estimated mode --------------------------------------------------

    def best_response_estimated(self, graph, joint, state: LocalState,
                                shared_view, catalog_size: int,
                                rng: np.random.Generator,
                                ) -> tuple[NodeAction, tuple]:
        """Pick the class with the lowest estimated delta; occasionally
        (eps_explore) take a random non-keep candidate to keep every class
        sampled."""
        ctx = context_key(state, graph)
        cands = class_candidates(graph, joint, self.node, state.demand_row,
                                 catalog_size)
        # exploration scales with local dissatisfaction: a cache already
        # serving most demand is left alone, an ineffective one is probed
        total = float(state.demand_row.sum())
        hit = sum(float(state.demand_row[c]) for c in state.cache_set)
        coverage = hit / total if total > 0 else 0.0
        p_explore = self.config.eps_explore * (1.0 - coverage)
        if len(cands) > 1 and rng.random() < p_explore:
            cls, act = cands[1 + int(rng.integers(len(cands) - 1))]
            return act, cls
        best_cls, best_act = cands[0]
        best_est = 0.0
        for cls, act in cands[1:]:
            est = utility_estimated(shared_view, self.local_memory, self.node,
                                    ctx, cls, self.config.prior)
            if est < best_est:
                best_cls, best_act, best_est = cls, act, est
        if best_est < -self.config.eps_switch:
            return best_act, best_cls
        return joint[self.node], ("keep",)

    def record_outcome(self, context: tuple, act_class: tuple, delta: float,
                       slot: int, shared_mem) -> None:
        from fogsim.memory import EpisodeRecord
        self.local_memory.add(context, act_class, delta)
        shared_mem.append_episode(EpisodeRecord(self.node, context, act_class,
                                                float(delta), slot))
