"""Loop-style numeric kernels, compiled with numba unless WSNOPT_NUMBA=0.

Every kernel is written as plain loops over preallocated numpy arrays and
consumes pregenerated uniform draws instead of calling an RNG, so the
compiled and fallback paths execute identical float64 operations in
identical order and produce bit-identical results.
"""

import numpy as np

from ._accel import maybe_njit


@maybe_njit
def _fpow(x, y):
    """x ** y with the common small integer exponents special-cased so the
    compiled and interpreted paths share the exact same multiply sequence."""
    if y == 0.0:
        return 1.0
    if y == 1.0:
        return x
    if y == 2.0:
        return x * x
    return x ** y


@maybe_njit
def dist_matrix(pos):
    """Pairwise Euclidean distances for an (n, 2) position array."""
    n = pos.shape[0]
    out = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            dx = pos[i, 0] - pos[j, 0]
            dy = pos[i, 1] - pos[j, 1]
            d = np.sqrt(dx * dx + dy * dy)
            out[i, j] = d
            out[j, i] = d
    return out


@maybe_njit
def weighted_pick(dists, radii):
    """Index minimizing dists[k] / radii[k].

    Entries are scanned in order and only a strictly smaller cost replaces
    the incumbent, so ties resolve to the lowest index.
    """
    best = np.inf
    pick = 0
    for k in range(radii.shape[0]):
        cost = dists[k] / radii[k]
        if cost < best:
            best = cost
            pick = k
    return pick


@maybe_njit
def voronoi_assign(node_pos, head_pos, radii):
    """Weighted-Voronoi assignment: node -> argmin over heads of d/R."""
    n = node_pos.shape[0]
    h = head_pos.shape[0]
    out = np.zeros(n, dtype=np.int64)
    dists = np.zeros(h, dtype=np.float64)
    for i in range(n):
        for k in range(h):
            dx = node_pos[i, 0] - head_pos[k, 0]
            dy = node_pos[i, 1] - head_pos[k, 1]
            dists[k] = np.sqrt(dx * dx + dy * dy)
        out[i] = weighted_pick(dists, radii)
    return out


@maybe_njit
def route_dp(adj, node_cost, dest):
    """Single-destination least-cost routes on a node-weighted graph.

    Every edge leaving vertex u costs node_cost[u] (the transmitter pays),
    so a route's cost is the sum of node costs along it, destination
    excluded.  Linear-scan Dijkstra: O(n^2) for n vertices.  Returns
    (dist, next_hop); next_hop[dest] = dest, unreachable vertices keep
    dist = inf and next_hop = -1.
    """
    n = adj.shape[0]
    dist = np.full(n, np.inf, dtype=np.float64)
    next_hop = np.full(n, -1, dtype=np.int64)
    done = np.zeros(n, dtype=np.uint8)
    dist[dest] = 0.0
    next_hop[dest] = dest
    for _ in range(n):
        u = -1
        best = np.inf
        for v in range(n):
            if done[v] == 0 and dist[v] < best:
                best = dist[v]
                u = v
        if u < 0:
            break
        done[u] = 1
        for v in range(n):
            if done[v] == 0 and adj[v, u] != 0:
                cand = node_cost[v] + dist[u]
                if cand < dist[v]:
                    dist[v] = cand
                    next_hop[v] = u
    return dist, next_hop


@maybe_njit
def eta_value(i, j, energies, dist, d_sink, lam):
    """Hop desirability: sender energy over hop length, scaled up when the
    hop makes progress toward the sink."""
    delta = energies[i] / dist[i, j]
    ratio = d_sink[j] / d_sink[i]
    return delta * (1.0 + _fpow(ratio, lam))


@maybe_njit
def transition_weights(cur, visited, relax, adj, tau, energies, dist, d_sink,
                       alpha_exp, beta_exp, lam, weights):
    """Fill unnormalized move weights out of `cur`; -1 marks infeasible.

    Returns (total weight, feasible count).  With relax set, previously
    visited vertices become feasible again (stuck-colony recovery).
    """
    n = adj.shape[0]
    total = 0.0
    feasible = 0
    for j in range(n):
        weights[j] = -1.0
        if j == cur or adj[cur, j] == 0:
            continue
        if relax == 0 and visited[j] != 0:
            continue
        if dist[cur, j] <= 0.0:
            continue
        w = _fpow(tau[cur, j], alpha_exp) * _fpow(
            eta_value(cur, j, energies, dist, d_sink, lam), beta_exp)
        weights[j] = w
        total += w
        feasible += 1
    return total, feasible


@maybe_njit
def roulette_pick(weights, total, u):
    """Proportional selection over non-negative weights; -1 = infeasible.

    Zero total weight falls back to a uniform pick over the feasible set.
    Returns (index, zero_weight_flag).
    """
    n = weights.shape[0]
    if total > 0.0:
        acc = 0.0
        last = -1
        for j in range(n):
            if weights[j] < 0.0:
                continue
            last = j
            acc += weights[j] / total
            if u < acc:
                return j, 0
        return last, 0
    count = 0
    for j in range(n):
        if weights[j] >= 0.0:
            count += 1
    target = int(u * count)
    if target >= count:
        target = count - 1
    seen = 0
    for j in range(n):
        if weights[j] >= 0.0:
            if seen == target:
                return j, 1
            seen += 1
    return -1, 1


@maybe_njit
def construct_tour(start, sink, relax, adj, tau, energies, dist, d_sink,
                   alpha_exp, beta_exp, lam, uniforms, path, visited, weights):
    """Walk one ant from `start` toward the sink.

    Consumes uniforms positionally, one per step.  Returns
    (success, path length, zero-weight event count).
    """
    n = adj.shape[0]
    max_steps = uniforms.shape[0]
    for j in range(n):
        visited[j] = 0
    cur = start
    visited[cur] = 1
    path[0] = cur
    plen = 1
    zero_events = 0
    for step in range(max_steps):
        if cur == sink:
            return 1, plen, zero_events
        total, feasible = transition_weights(
            cur, visited, relax, adj, tau, energies, dist, d_sink,
            alpha_exp, beta_exp, lam, weights)
        if feasible == 0:
            return 0, plen, zero_events
        pick, zero_flag = roulette_pick(weights, total, uniforms[step])
        zero_events += zero_flag
        path[plen] = pick
        plen += 1
        visited[pick] = 1
        cur = pick
    if cur == sink:
        return 1, plen, zero_events
    return 0, plen, zero_events


@maybe_njit
def tour_cost(path, plen, edge_cost):
    total = 0.0
    for k in range(plen - 1):
        total += edge_cost[path[k], path[k + 1]]
    return total


@maybe_njit
def pheromone_update(tau, path, plen, energies, dist, p, tau_min):
    """Evaporate every arc by (1-p), then deposit p * delta on traversed
    arcs, delta = (E_i + E_j) / d(i,j)^2.  Symmetry and the tau floor are
    maintained."""
    n = tau.shape[0]
    for i in range(n):
        for j in range(n):
            v = tau[i, j] * (1.0 - p)
            if v < tau_min:
                v = tau_min
            tau[i, j] = v
    for k in range(plen - 1):
        i = path[k]
        j = path[k + 1]
        d = dist[i, j]
        delta = (energies[i] + energies[j]) / (d * d)
        v = tau[i, j] + p * delta
        if v < tau_min:
            v = tau_min
        tau[i, j] = v
        tau[j, i] = v
    return tau


@maybe_njit
def aco_search(adj, tau, energies, dist, d_sink, edge_cost, uniforms,
               alpha_exp, beta_exp, lam, p_evap, tau_min, sink):
    """Full colony search: n_iter iterations of n_ants tours plus per-CH
    best-tour pheromone reinforcement.

    uniforms has shape (n_iter, 2, n_ants, max_steps); the second axis
    feeds the relaxed retry pass used only when every strict tour of an
    iteration fails.  Returns per-start-CH best paths/lengths/costs, the
    per-iteration best-cost trace, relaxed-pass flags and the zero-weight
    event count.
    """
    n = adj.shape[0]
    n_ch = n - 1
    n_iter = uniforms.shape[0]
    n_ants = uniforms.shape[2]
    max_steps = uniforms.shape[3]

    best_path = np.full((n_ch, max_steps + 1), -1, dtype=np.int64)
    best_plen = np.zeros(n_ch, dtype=np.int64)
    best_cost = np.full(n_ch, np.inf, dtype=np.float64)
    cost_trace = np.full(n_iter, np.inf, dtype=np.float64)
    relaxed = np.zeros(n_iter, dtype=np.uint8)
    zero_events = 0

    iter_path = np.full((n_ch, max_steps + 1), -1, dtype=np.int64)
    iter_plen = np.zeros(n_ch, dtype=np.int64)
    iter_cost = np.full(n_ch, np.inf, dtype=np.float64)
    ant_path = np.zeros(max_steps + 1, dtype=np.int64)
    visited = np.zeros(n, dtype=np.uint8)
    weights = np.zeros(n, dtype=np.float64)

    for t in range(n_iter):
        for c in range(n_ch):
            iter_plen[c] = 0
            iter_cost[c] = np.inf
        any_success = 0
        for mode in range(2):
            if mode == 1 and any_success == 1:
                break
            if mode == 1:
                relaxed[t] = 1
            for a in range(n_ants):
                start = (a + t) % n_ch
                ok, plen, zf = construct_tour(
                    start, sink, mode, adj, tau, energies, dist, d_sink,
                    alpha_exp, beta_exp, lam, uniforms[t, mode, a], ant_path,
                    visited, weights)
                zero_events += zf
                if ok == 0:
                    continue
                any_success = 1
                cost = tour_cost(ant_path, plen, edge_cost)
                if cost < iter_cost[start]:
                    iter_cost[start] = cost
                    iter_plen[start] = plen
                    for k in range(plen):
                        iter_path[start, k] = ant_path[k]
        for c in range(n_ch):
            if iter_plen[c] == 0:
                continue
            pheromone_update(tau, iter_path[c], iter_plen[c], energies, dist,
                             p_evap, tau_min)
            if iter_cost[c] < cost_trace[t]:
                cost_trace[t] = iter_cost[c]
            if iter_cost[c] < best_cost[c]:
                best_cost[c] = iter_cost[c]
                best_plen[c] = iter_plen[c]
                for k in range(iter_plen[c]):
                    best_path[c, k] = iter_path[c, k]
    return best_path, best_plen, best_cost, cost_trace, relaxed, zero_events
