"""Independent naive objective evaluator used as a test oracle.

Deliberately written as per-request visited-set walks with no memoization or
vectorization, so it shares no code path with the production evaluator.
"""

from fogsim.topology import CLOUD


def ref_walk(graph, joint, ingress, content):
    """(serving node or CLOUD, accumulated link delay)."""
    visited = {ingress}
    u = ingress
    delay = 0.0
    while True:
        if content in joint[u].cache_set:
            return u, delay
        nxt = joint[u].forward_to
        if nxt == CLOUD or not graph.is_alive(nxt) or nxt not in graph.adj[u]:
            return CLOUD, delay
        delay += graph.adj[u][nxt]
        u = nxt
        if u in visited:
            return CLOUD, delay
        visited.add(u)


def ref_evaluate(graph, joint, demand, weights, costs):
    """Returns (L, C, R, scalar, per-node contribution dict)."""
    alive = graph.alive_nodes()
    n, n_contents = demand.shape

    served = {i: 0.0 for i in alive}
    for k, i in enumerate(alive):
        for c in range(n_contents):
            s, _ = ref_walk(graph, joint, i, c)
            if s != CLOUD:
                served[s] += demand[k, c]

    total = sum(demand[k, c] for k in range(n) for c in range(n_contents))
    contrib = {}
    L = C = R = 0.0
    for k, i in enumerate(alive):
        L_i = 0.0
        for c in range(n_contents):
            s, delay = ref_walk(graph, joint, i, c)
            if s == CLOUD:
                lat = delay + graph.cloud_delay
            else:
                spec = graph.nodes[s]
                lat = delay + spec.proc_delay * (
                    1.0 + served[s] / spec.compute_capacity)
            L_i += demand[k, c] * lat
        L_i = L_i / total if total > 0 else 0.0
        C_i = (costs.c_store * len(joint[i].cache_set)
               + costs.c_serve * served[i])
        util = served[i] / graph.nodes[i].compute_capacity
        R_i = max(0.0, util - costs.rho_max) ** 2
        contrib[i] = (L_i, C_i, R_i)
        L += L_i
        C += C_i
        R += R_i
    scalar = weights.alpha * L + weights.beta * C + weights.gamma * R
    return L, C, R, scalar, contrib
