"""Bounded-degree random mesh of fog nodes.

Nodes carry compute/cache capacity and a base processing delay, links carry a
traversal delay.  Generation builds a random spanning tree first (so the
graph is connected by construction) and then adds extra edges up to an edge
budget while respecting the degree bound.  Failed nodes stay in the graph as
tombstones so node ids remain stable across failure experiments.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field

import numpy as np

# Miss-forwarding target meaning "give up and fetch from the cloud".
CLOUD = -1

INF = math.inf


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class NodeSpec:
    id: int
    compute_capacity: float  # requests per time unit
    cache_capacity: int      # content slots
    proc_delay: float        # base processing delay, time units

    def __post_init__(self):
        if self.compute_capacity <= 0:
            raise TopologyError(f"node {self.id}: compute_capacity must be > 0")
        if self.cache_capacity < 0:
            raise TopologyError(f"node {self.id}: cache_capacity must be >= 0")
        if self.proc_delay <= 0:
            raise TopologyError(f"node {self.id}: proc_delay must be > 0")


@dataclass
class FogGraph:
    nodes: dict[int, NodeSpec]
    adj: dict[int, dict[int, float]]  # adj[i][j] = link delay, symmetric
    cloud_delay: float
    alive: dict[int, bool]
    meta: dict = field(default_factory=dict)  # generation parameters, for serialization

    def alive_nodes(self) -> list[int]:
        return sorted(i for i, ok in self.alive.items() if ok)

    def is_alive(self, i: int) -> bool:
        return self.alive.get(i, False)

    def neighbors(self, i: int) -> list[int]:
        """Alive neighbors of i, sorted."""
        if i not in self.nodes:
            raise TopologyError(f"unknown node {i}")
        return sorted(j for j in self.adj[i] if self.alive[j])

    def degree(self, i: int) -> int:
        return len(self.neighbors(i))

    def link_delay(self, i: int, j: int) -> float:
        return self.adj[i][j]

    def num_alive_links(self) -> int:
        return sum(len(self.neighbors(i)) for i in self.alive_nodes()) // 2

    def to_json(self) -> str:
        doc = {
            "nodes": [
                {
                    "id": n.id,
                    "compute_capacity": n.compute_capacity,
                    "cache_capacity": n.cache_capacity,
                    "proc_delay": n.proc_delay,
                    "alive": self.alive[n.id],
                }
                for n in sorted(self.nodes.values(), key=lambda n: n.id)
            ],
            "links": [
                {"a": i, "b": j, "delay": d}
                for i in sorted(self.adj)
                for j, d in sorted(self.adj[i].items())
                if i < j
            ],
            "cloud_delay": self.cloud_delay,
            "meta": self.meta,
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FogGraph":
        doc = json.loads(text)
        nodes = {}
        alive = {}
        for nd in doc["nodes"]:
            nodes[nd["id"]] = NodeSpec(nd["id"], nd["compute_capacity"],
                                       nd["cache_capacity"], nd["proc_delay"])
            alive[nd["id"]] = nd["alive"]
        adj = {i: {} for i in nodes}
        for ld in doc["links"]:
            adj[ld["a"]][ld["b"]] = ld["delay"]
            adj[ld["b"]][ld["a"]] = ld["delay"]
        return cls(nodes=nodes, adj=adj, cloud_delay=doc["cloud_delay"],
                   alive=alive, meta=doc.get("meta", {}))


DEFAULT_RANGES = {
    "compute_capacity": (5.0, 20.0),
    "cache_capacity": (2, 5),
    "proc_delay": (0.5, 2.0),
    "link_delay": (1.0, 5.0),
}


def generate_mesh(n: int, max_degree: int, node_ranges: dict | None = None,
                  seed: int = 0, edge_budget: float = 1.5,
                  cloud_delay: float = 50.0) -> FogGraph:
    """Generate a connected bounded-degree mesh, deterministic for a fixed seed.

    edge_budget is a multiplier on n: extra edges are added beyond the
    spanning tree until ~edge_budget*n total edges or no legal pair remains.
    """
    if n < 2:
        raise TopologyError("need at least 2 nodes")
    if max_degree < 2:
        raise TopologyError("max_degree must be >= 2")
    ranges = dict(DEFAULT_RANGES)
    if node_ranges:
        ranges.update(node_ranges)

    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0xF09)))
    nodes = {}
    for i in range(n):
        cc = float(rng.uniform(*ranges["compute_capacity"]))
        lo, hi = ranges["cache_capacity"]
        sc = int(rng.integers(lo, hi + 1))
        pd = float(rng.uniform(*ranges["proc_delay"]))
        nodes[i] = NodeSpec(i, cc, sc, pd)

    adj: dict[int, dict[int, float]] = {i: {} for i in range(n)}
    deg = [0] * n

    def add_link(a, b):
        d = float(rng.uniform(*ranges["link_delay"]))
        adj[a][b] = d
        adj[b][a] = d
        deg[a] += 1
        deg[b] += 1

    # Random spanning tree: attach each node (in random order) to a random
    # already-placed node that still has degree slack.
    order = [int(x) for x in rng.permutation(n)]
    placed = [order[0]]
    for v in order[1:]:
        slack = [u for u in placed if deg[u] < max_degree]
        if not slack:
            raise TopologyError("no connected graph within degree bound")
        u = slack[int(rng.integers(len(slack)))]
        add_link(u, v)
        placed.append(v)

    target_edges = int(round(edge_budget * n))
    extra = target_edges - (n - 1)
    attempts = 0
    while extra > 0 and attempts < 50 * n:
        candidates = [(a, b) for a in range(n) for b in range(a + 1, n)
                      if b not in adj[a] and deg[a] < max_degree and deg[b] < max_degree]
        if not candidates:
            break
        a, b = candidates[int(rng.integers(len(candidates)))]
        add_link(a, b)
        extra -= 1
        attempts += 1

    g = FogGraph(nodes=nodes, adj=adj, cloud_delay=float(cloud_delay),
                 alive={i: True for i in range(n)},
                 meta={"n": n, "max_degree": max_degree, "seed": int(seed),
                       "edge_budget": edge_budget})
    assert is_connected(g)
    return g


def is_connected(g: FogGraph) -> bool:
    """True iff all alive nodes are mutually reachable over alive links."""
    alive = g.alive_nodes()
    if not alive:
        return True
    seen = {alive[0]}
    stack = [alive[0]]
    while stack:
        u = stack.pop()
        for v in g.neighbors(u):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == len(alive)


def connected_components(g: FogGraph) -> list[set[int]]:
    comps = []
    unseen = set(g.alive_nodes())
    while unseen:
        start = min(unseen)
        comp = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in g.neighbors(u):
                if v not in comp:
                    comp.add(v)
                    stack.append(v)
        comps.append(comp)
        unseen -= comp
    return comps


def path_delay(g: FogGraph, src: int, dst: int) -> float:
    """Minimum total link delay between alive nodes; inf if unreachable."""
    for x in (src, dst):
        if x not in g.nodes:
            raise TopologyError(f"unknown node {x}")
    if not g.is_alive(src) or not g.is_alive(dst):
        return INF
    if src == dst:
        return 0.0
    dist = {src: 0.0}
    heap = [(0.0, src)]
    while heap:
        d, u = heapq.heappop(heap)
        if u == dst:
            return d
        if d > dist.get(u, INF):
            continue
        for v in g.neighbors(u):
            nd = d + g.adj[u][v]
            if nd < dist.get(v, INF):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return INF


def fail_node(g: FogGraph, i: int) -> FogGraph:
    """Mark node i dead in place.  Its links become unusable, its cached
    contents unavailable.  Returns g for chaining."""
    if i not in g.nodes:
        raise TopologyError(f"unknown node {i}")
    if not g.alive[i]:
        raise TopologyError(f"node {i} already dead")
    g.alive[i] = False
    return g
