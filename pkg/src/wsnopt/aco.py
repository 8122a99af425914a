"""Ant-colony inter-cluster routing.

Each campaign the sink rebuilds a minimum-energy routing tree over the
cluster heads: ants walk from every head toward the sink, moves weighted by
pheromone and an energy-over-distance heuristic, and the best tour per head
reinforces the trail.  Per-head best tours are merged best-cost-first into
an acyclic next-hop tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .model import EnergyModel


@dataclass
class AcoParams:
    """Colony parameters.

    gamma_norm is the normalization constant of the proportional rule; it
    is realized as the per-step normalizer over the feasible set, so its
    numeric value cancels and only its validity range is enforced.
    """

    alpha_exp: float = 1.0
    beta_exp: float = 1.0
    gamma_norm: float = 1.0
    lambda_norm: float = 1.0
    n_ants: int = 20
    n_iter: int = 100
    tau_min: float = 1e-6

    def __post_init__(self):
        if self.alpha_exp < 0 or self.beta_exp < 0:
            raise ValueError("exponents must be non-negative")
        if self.alpha_exp == 0 and self.beta_exp == 0:
            raise ValueError("alpha_exp and beta_exp cannot both be zero")
        if not 0.0 < self.gamma_norm <= 1.0:
            raise ValueError("gamma_norm must be in (0, 1]")
        if self.n_ants < 1 or self.n_iter < 1:
            raise ValueError("n_ants and n_iter must be positive")
        if self.tau_min <= 0:
            raise ValueError("tau_min must be positive")


class PheromoneMatrix:
    """Symmetric trail intensities over CH vertices plus the sink."""

    def __init__(self, n_vertices: int, tau_init: float = 1.0,
                 tau_min: float = 1e-6):
        if tau_init < tau_min:
            raise ValueError("tau_init below tau_min")
        self.tau = np.full((n_vertices, n_vertices), tau_init, dtype=np.float64)
        self.tau_min = tau_min


@dataclass
class ChGraph:
    """Inter-cluster topology: head vertices 0..n-1 plus the sink as the
    last vertex, with pairwise distances and range-limited adjacency."""

    head_ids: list[int]
    dist: np.ndarray
    adj: np.ndarray
    energies: np.ndarray
    comm_range: float
    range_growths: int = 0

    @property
    def n_vertices(self) -> int:
        return self.dist.shape[0]

    @property
    def sink_index(self) -> int:
        return self.dist.shape[0] - 1


@dataclass
class RoutingTree:
    """Next hop per CH id (-1 means the sink) and accumulated path cost."""

    next_hop: dict[int, int]
    path_cost: dict[int, float]
    cost_trace: np.ndarray = field(default_factory=lambda: np.array([]))
    relaxed_iters: int = 0
    zero_weight_events: int = 0
    fallback_heads: list[int] = field(default_factory=list)

    def to_record(self, round_index: int) -> dict:
        return {
            "round": round_index,
            "next_hop": {str(k): v for k, v in sorted(self.next_hop.items())},
            "path_cost": {str(k): v for k, v in sorted(self.path_cost.items())},
        }


def _loop_free(path: list[int]) -> list[int]:
    """Cut cycles out of a walk (relaxed tours may revisit vertices)."""
    simple: list[int] = []
    seen = {}
    for v in path:
        if v in seen:
            del_from = seen[v] + 1
            for w in simple[del_from:]:
                del seen[w]
            simple = simple[:del_from]
        else:
            seen[v] = len(simple)
            simple.append(v)
    return simple


def _sink_reachable(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    sink = n - 1
    seen = np.zeros(n, dtype=bool)
    seen[sink] = True
    stack = [sink]
    while stack:
        u = stack.pop()
        for v in range(n):
            if adj[u, v] and not seen[v]:
                seen[v] = True
                stack.append(v)
    return bool(seen.all())


def build_ch_graph(positions: np.ndarray, energies: np.ndarray,
                   head_ids: list[int], sink_pos: tuple[float, float],
                   member_radii: list[float] | None = None,
                   comm_range: float | None = None) -> ChGraph:
    """Assemble the CH-plus-sink graph.

    The default communication range is twice the largest realized cluster
    radius; if that leaves the graph disconnected from the sink the range
    grows geometrically until every head is reachable.
    """
    heads = list(head_ids)
    pts = np.vstack([positions[heads], np.array([sink_pos])])
    dist = _kernels.dist_matrix(pts)
    if comm_range is None:
        base = max(member_radii) if member_radii else 0.0
        comm_range = 2.0 * base
    if comm_range <= 0.0:
        positive = dist[dist > 0]
        comm_range = float(positive.min()) if positive.size else 1.0
    vertex_energy = np.concatenate([energies[heads], [0.0]])
    growths = 0
    while True:
        adj = ((dist > 0.0) & (dist <= comm_range)).astype(np.uint8)
        np.fill_diagonal(adj, 0)
        if _sink_reachable(adj):
            break
        comm_range *= 1.5
        growths += 1
    return ChGraph(heads, dist, adj, vertex_energy, comm_range, growths)


def heuristic(i: int, j: int, graph: ChGraph, lam: float) -> float:
    """Desirability of hop i -> j: sender energy per meter, boosted when j
    sits closer to the sink than i does."""
    if i == j:
        raise ValueError("i and j must differ")
    if graph.dist[i, j] <= 0.0:
        raise ValueError("coincident vertices carry no edge")
    d_sink = graph.dist[:, graph.sink_index]
    return float(_kernels.eta_value(i, j, graph.energies, graph.dist, d_sink, lam))


def transition_probabilities(current: int, graph: ChGraph, tau: np.ndarray,
                             visited: np.ndarray, params: AcoParams,
                             relax: bool = False) -> np.ndarray:
    """Move distribution out of `current` over the feasible candidate set.

    Entries for infeasible vertices are 0; the rest are proportional to
    tau^alpha * eta^beta and sum to 1.  An all-zero weight row falls back
    to uniform over the feasible set.
    """
    n = graph.n_vertices
    weights = np.zeros(n, dtype=np.float64)
    d_sink = np.ascontiguousarray(graph.dist[:, graph.sink_index])
    total, feasible = _kernels.transition_weights(
        current, visited.astype(np.uint8), 1 if relax else 0, graph.adj, tau,
        graph.energies, graph.dist, d_sink, params.alpha_exp, params.beta_exp,
        params.lambda_norm, weights)
    if feasible == 0:
        raise ValueError("no feasible candidate")
    probs = np.zeros(n, dtype=np.float64)
    mask = weights >= 0.0
    if total > 0.0:
        probs[mask] = weights[mask] / total
    else:
        probs[mask] = 1.0 / feasible
    return probs


def update_pheromone(matrix: PheromoneMatrix, tour: list[int],
                     graph: ChGraph, n_res: int) -> PheromoneMatrix:
    """Evaporate all arcs by 1/n_res and reinforce the toured arcs."""
    if n_res < 1:
        raise ValueError("n_res must be at least 1")
    path = np.array(tour, dtype=np.int64)
    _kernels.pheromone_update(matrix.tau, path, len(tour), graph.energies,
                              graph.dist, 1.0 / n_res, matrix.tau_min)
    return matrix


def edge_energy_costs(graph: ChGraph, model: EnergyModel) -> np.ndarray:
    """Per-arc transmission energy used to rank tours."""
    d = graph.dist
    amp = d * d if model.path_loss_exp == 2 else (d * d) * (d * d)
    return model.packet_bits * (model.e_elec + model.e_amp * amp)


def run_aco(graph: ChGraph, model: EnergyModel, params: AcoParams,
            n_res: int, rng: np.random.Generator) -> RoutingTree:
    """Full colony search returning the merged next-hop tree.

    Deterministic given the generator state: all randomness is drawn up
    front as a uniform block consumed positionally by the kernels.
    """
    n_ch = len(graph.head_ids)
    if n_ch == 0:
        raise ValueError("no cluster heads to route")
    if n_res < 1:
        raise ValueError("n_res must be at least 1")
    sink = graph.sink_index
    d_sink = np.ascontiguousarray(graph.dist[:, sink])
    edge_cost = edge_energy_costs(graph, model)
    tau = np.full((n_ch + 1, n_ch + 1), 1.0, dtype=np.float64)
    max_steps = 4 * (n_ch + 1)
    uniforms = rng.random((params.n_iter, 2, params.n_ants, max_steps))

    best_path, best_plen, best_cost, cost_trace, relaxed, zero_events = (
        _kernels.aco_search(graph.adj, tau, graph.energies, graph.dist,
                            d_sink, edge_cost, uniforms, params.alpha_exp,
                            params.beta_exp, params.lambda_norm,
                            1.0 / n_res, params.tau_min, sink))

    # merge per-head best tours, cheapest first, into one acyclic tree
    order = sorted(range(n_ch), key=lambda c: (best_cost[c], c))
    hop = {}
    fallback = []
    done = {sink}
    for c in order:
        if best_plen[c] == 0:
            fallback.append(c)
            continue
        path = _loop_free([int(v) for v in best_path[c, : best_plen[c]]])
        for k in range(len(path) - 1):
            u = path[k]
            if u in done:
                break
            hop[u] = path[k + 1]
            done.add(u)
    for c in fallback:
        if c not in done:
            hop[c] = sink
            done.add(c)

    next_hop = {}
    path_cost = {}
    for c in range(n_ch):
        total = 0.0
        u = c
        while u != sink:
            v = hop[u]
            total += float(edge_cost[u, v])
            u = v
        next_hop[graph.head_ids[c]] = (
            -1 if hop[c] == sink else graph.head_ids[hop[c]])
        path_cost[graph.head_ids[c]] = total
    return RoutingTree(next_hop, path_cost, cost_trace, int(relaxed.sum()),
                       int(zero_events),
                       [graph.head_ids[c] for c in fallback])
