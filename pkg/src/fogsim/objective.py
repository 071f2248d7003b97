"""Global objective: weighted latency + cost + risk over a joint action.

The scalar alpha*L + beta*C + gamma*R is evaluated deterministically against
an expected-demand snapshot, decomposes additively across nodes, and serves
as the exact potential for the agent game (a unilateral action change moves
the scalar by exactly the change in that node's oracle utility).

Latency model: a cache hit at the ingress costs the node's processing delay
scaled by (1 + load/capacity); a miss follows forward_to pointers hop by hop
(adding link delays) until some node caches the content, or falls back to
the cloud when the chain reaches the cloud sentinel, a dead pointer, or a
forwarding cycle.  Cost is storage plus served traffic; risk is the squared
utilization excess above rho_max.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fogsim.topology import CLOUD, FogGraph


class ObjectiveError(ValueError):
    pass


@dataclass(frozen=True)
class ObjectiveWeights:
    alpha: float = 1.0
    beta: float = 0.05
    gamma: float = 0.5

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ObjectiveError("weights must be >= 0")
        if self.alpha == self.beta == self.gamma == 0:
            raise ObjectiveError("weights must not all be zero")


@dataclass(frozen=True)
class CostModel:
    c_store: float = 0.1
    c_serve: float = 0.01
    rho_max: float = 0.8


@dataclass(frozen=True)
class NodeAction:
    cache_set: frozenset[int]
    forward_to: int  # alive neighbor id or CLOUD

    def sort_key(self):
        return (tuple(sorted(self.cache_set)), self.forward_to)


# JointAction: dict[node id -> NodeAction], one entry per alive node.
JointAction = dict[int, NodeAction]


@dataclass(frozen=True)
class ObjectiveValue:
    L: float
    C: float
    R: float
    scalar: float


@dataclass(frozen=True)
class LocalContribution:
    node: int
    L_i: float
    C_i: float
    R_i: float

    def weighted(self, w: ObjectiveWeights) -> float:
        return w.alpha * self.L_i + w.beta * self.C_i + w.gamma * self.R_i


def validate_action(graph: FogGraph, node: int, action: NodeAction,
                    catalog_size: int) -> None:
    spec = graph.nodes[node]
    if len(action.cache_set) > spec.cache_capacity:
        raise ObjectiveError(f"node {node}: cache over capacity")
    if any(not 0 <= c < catalog_size for c in action.cache_set):
        raise ObjectiveError(f"node {node}: content outside catalog")
    if action.forward_to == node:
        raise ObjectiveError(f"node {node}: cannot forward to itself")
    if action.forward_to != CLOUD and action.forward_to not in graph.adj[node]:
        raise ObjectiveError(f"node {node}: forward target not a neighbor")


def _resolve_content(graph: FogGraph, joint: JointAction, content: int,
                     alive: list[int]) -> dict[int, tuple[int, float]]:
    """For each alive node: (serving node or CLOUD, link delay to it).

    Pointers to the cloud, to dead nodes, or forming a cycle resolve to
    CLOUD; for a cycle, the accumulated lap delay is kept (the request
    wandered before giving up).
    """
    res: dict[int, tuple[int, float]] = {}
    for start in alive:
        if start in res:
            continue
        path: list[int] = []
        pos: dict[int, int] = {}
        u = start
        while True:
            if u in res:
                break
            if u in pos:  # forwarding cycle
                cyc = path[pos[u]:]
                lap = sum(graph.adj[a][joint[a].forward_to] for a in cyc)
                for a in cyc:
                    res[a] = (CLOUD, lap)
                break
            if content in joint[u].cache_set:
                res[u] = (u, 0.0)
                break
            nxt = joint[u].forward_to
            if nxt == CLOUD or not graph.is_alive(nxt) or nxt not in graph.adj[u]:
                res[u] = (CLOUD, 0.0)
                break
            pos[u] = len(path)
            path.append(u)
            u = nxt
        for a in reversed(path):
            if a in res:
                continue
            nxt = joint[a].forward_to
            s, d = res[nxt]
            res[a] = (s, graph.adj[a][nxt] + d)
    return res


@dataclass
class EvalDetail:
    """Raw per-pair arrays backing an evaluation; row order = node_ids."""
    node_ids: list[int]
    latency: np.ndarray      # [n, C] time units per (ingress, content)
    serve: np.ndarray        # [n, C] serving node id or CLOUD
    served_rate: np.ndarray  # [n] expected requests/unit served at each node
    utilization: np.ndarray  # [n]


def evaluate_detailed(graph: FogGraph, joint: JointAction, demand: np.ndarray,
                      weights: ObjectiveWeights, costs: CostModel,
                      ) -> tuple[ObjectiveValue, list[LocalContribution], EvalDetail]:
    alive = graph.alive_nodes()
    if demand.shape[0] != len(alive):
        raise ObjectiveError("demand matrix does not cover the alive nodes")
    n, n_contents = demand.shape
    idx = {node: k for k, node in enumerate(alive)}

    serve = np.full((n, n_contents), CLOUD, dtype=int)
    hop_delay = np.zeros((n, n_contents))
    for c in range(n_contents):
        res = _resolve_content(graph, joint, c, alive)
        for node, (s, d) in res.items():
            serve[idx[node], c] = s
            hop_delay[idx[node], c] = d

    served_rate = np.zeros(n)
    for k in range(n):
        for c in range(n_contents):
            s = serve[k, c]
            if s != CLOUD:
                served_rate[idx[s]] += demand[k, c]

    caps = np.array([graph.nodes[i].compute_capacity for i in alive])
    procs = np.array([graph.nodes[i].proc_delay for i in alive])
    utilization = served_rate / caps
    loaded_proc = procs * (1.0 + utilization)  # load = served rate

    latency = hop_delay.copy()
    for k in range(n):
        for c in range(n_contents):
            s = serve[k, c]
            latency[k, c] += graph.cloud_delay if s == CLOUD else loaded_proc[idx[s]]

    total_rate = float(demand.sum())
    if total_rate > 0:
        L_per = (demand * latency).sum(axis=1) / total_rate
    else:
        L_per = np.zeros(n)
    C_per = np.array([costs.c_store * len(joint[i].cache_set) for i in alive])
    C_per += costs.c_serve * served_rate
    R_per = np.maximum(0.0, utilization - costs.rho_max) ** 2

    L, C, R = float(L_per.sum()), float(C_per.sum()), float(R_per.sum())
    scalar = weights.alpha * L + weights.beta * C + weights.gamma * R
    value = ObjectiveValue(L, C, R, scalar)
    contribs = [LocalContribution(i, float(L_per[k]), float(C_per[k]), float(R_per[k]))
                for k, i in enumerate(alive)]
    detail = EvalDetail(alive, latency, serve, served_rate, utilization)
    return value, contribs, detail


def evaluate(graph, joint, demand, weights, costs=CostModel()):
    value, contribs, _ = evaluate_detailed(graph, joint, demand, weights, costs)
    return value, contribs


def potential(graph, joint, demand, weights, costs=CostModel()) -> float:
    """The game's exact potential: identical to the objective scalar."""
    value, _, _ = evaluate_detailed(graph, joint, demand, weights, costs)
    return value.scalar


def request_latency(graph, joint, demand, ingress: int, content: int,
                    costs=CostModel()) -> float:
    """Latency of one request under the expected-load model."""
    _, _, detail = evaluate_detailed(graph, joint, demand,
                                     ObjectiveWeights(1, 0, 0), costs)
    k = detail.node_ids.index(ingress)
    return float(detail.latency[k, content])


@dataclass(frozen=True)
class SubObjective:
    name: str  # latency | cost | risk
    weight: float

    def extract(self, value: ObjectiveValue) -> float:
        return {"latency": value.L, "cost": value.C, "risk": value.R}[self.name]


def decompose(weights: ObjectiveWeights) -> list[SubObjective]:
    """Active sub-objectives; their weighted recomposition equals the scalar."""
    parts = [SubObjective("latency", weights.alpha),
             SubObjective("cost", weights.beta),
             SubObjective("risk", weights.gamma)]
    return [p for p in parts if p.weight > 0]


def recompose(subs: list[SubObjective], value: ObjectiveValue) -> float:
    return sum(s.weight * s.extract(value) for s in subs)
