"""Distributed intra-cluster topology.

Members of a cluster form an undirected connected graph; each node carries
a transmission cost blending its connectivity, link quality and residual
energy.  Routes to the cluster head minimize the summed transmitter costs
(single-destination dynamic programming), branches are ranked by node
coverage then cost, and incoming readings dispatch to reactive or
proactive monitoring against a hard margin.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .clustering import rssi_reading
from .model import Network


class IsolatedNodeError(ValueError):
    """A vertex with no connections violates the connectivity assumption."""


@dataclass
class LinkCostParams:
    mu: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError("mu must be in [0, 1]")


def link_cost(n_c: int, d_c: float, l_qi: float, e_res_norm: float,
              mu: float) -> float:
    """Transmission cost of one node.

    p * D_c + (1 - p) * (mu * L_qi + (1 - mu) * E) with p = 1/n_c; all
    inputs normalized to [0, 1] keeps the cost in [0, 1].
    """
    if n_c == 0:
        raise IsolatedNodeError("node has no connections")
    if n_c < 0:
        raise ValueError("n_c must be non-negative")
    for name, v in (("d_c", d_c), ("l_qi", l_qi), ("e_res_norm", e_res_norm),
                    ("mu", mu)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must be in [0, 1]")
    p = 1.0 / n_c
    return p * d_c + (1.0 - p) * (mu * l_qi + (1.0 - mu) * e_res_norm)


@dataclass
class ClusterGraph:
    """Cluster topology with per-vertex cost annotations.

    Vertices are sorted node ids (head included); adjacency is symmetric
    over pairs within the realized communication range.
    """

    vertex_ids: list[int]
    ch_id: int
    adj: np.ndarray
    node_cost: np.ndarray
    n_c: np.ndarray
    d_c: np.ndarray
    l_qi: np.ndarray
    e_res_norm: np.ndarray
    comm_range: float
    range_growths: int = 0

    @property
    def n(self) -> int:
        return len(self.vertex_ids)

    def index_of(self, node_id: int) -> int:
        return self.vertex_ids.index(node_id)


def _connected(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    stack = [0]
    while stack:
        u = stack.pop()
        for v in range(n):
            if adj[u, v] and not seen[v]:
                seen[v] = True
                stack.append(v)
    return bool(seen.all())


def build_cluster_graph(network: Network, member_ids: list[int], ch_id: int,
                        comm_range: float, params: LinkCostParams,
                        rng: np.random.Generator | None = None,
                        lqi_noise: float = 0.0) -> ClusterGraph:
    """Assemble the cluster graph and its cost annotations.

    Connectivity is an assumption of the routing layer, so a range that
    leaves the graph disconnected grows geometrically until it connects.
    Link quality decays linearly with mean neighbor distance (optional
    seeded noise); neighbor signal strengths are min-max normalized over
    the cluster's edges before averaging into the connectivity term.
    """
    ids = sorted(set(member_ids) | {ch_id})
    n = len(ids)
    pos = network.positions()[ids]
    dist = _kernels.dist_matrix(pos)
    if comm_range <= 0.0:
        raise ValueError("comm_range must be positive")
    growths = 0
    while True:
        adj = (dist <= comm_range).astype(np.uint8)
        np.fill_diagonal(adj, 0)
        if n == 1 or _connected(adj):
            break
        comm_range *= 1.5
        growths += 1

    n_c = adj.sum(axis=1).astype(np.int64)
    edge_rssi = np.zeros((n, n))
    edge_vals = []
    for i in range(n):
        for j in range(i + 1, n):
            if adj[i, j]:
                r = rssi_reading(max(dist[i, j], 1e-3))
                edge_rssi[i, j] = edge_rssi[j, i] = r
                edge_vals.append(r)
    if edge_vals:
        lo, hi = min(edge_vals), max(edge_vals)
    else:
        lo, hi = 0.0, 0.0

    d_c = np.zeros(n)
    l_qi = np.zeros(n)
    e_res = np.zeros(n)
    for i in range(n):
        node = network.nodes[ids[i]]
        e_res[i] = node.e_res / node.e_0
        if n_c[i] == 0:
            continue
        total = 0.0
        mean_d = 0.0
        for j in range(n):
            if adj[i, j]:
                norm = 1.0 if hi <= lo else (edge_rssi[i, j] - lo) / (hi - lo)
                total += norm
                mean_d += dist[i, j]
        d_c[i] = total / n_c[i]
        mean_d /= n_c[i]
        q = 1.0 - mean_d / comm_range
        if lqi_noise > 0.0 and rng is not None:
            q += lqi_noise * float(rng.standard_normal())
        l_qi[i] = min(1.0, max(0.0, q))

    cost = np.zeros(n)
    for i in range(n):
        if n_c[i] == 0:
            if n > 1:
                raise IsolatedNodeError(f"node {ids[i]} isolated")
            continue
        cost[i] = link_cost(int(n_c[i]), float(d_c[i]), float(l_qi[i]),
                            float(e_res[i]), params.mu)
    return ClusterGraph(ids, ch_id, adj, cost, n_c, d_c, l_qi, e_res,
                        comm_range, growths)


@dataclass
class Branch:
    """A member-to-head path: the head terminates the sequence and does not
    count toward the branch's node tally."""

    nodes: tuple[int, ...]
    total_cost: float

    @property
    def node_count(self) -> int:
        return len(self.nodes) - 1


@dataclass
class ClusterRoutes:
    """Least-cost routes of every member toward the head."""

    cost: dict[int, float]
    next_hop: dict[int, int]

    def path(self, node_id: int, ch_id: int) -> list[int]:
        out = [node_id]
        while out[-1] != ch_id:
            out.append(self.next_hop[out[-1]])
        return out


def all_pairs_routes(graph: ClusterGraph) -> ClusterRoutes:
    """Least-cost route per member to the head.

    Single-destination dynamic programming over transmitter-paid edge
    costs: quadratic in the vertex count, and cost-identical to a classic
    all-pairs relaxation restricted to the head column.
    """
    if np.any(graph.node_cost < 0.0):
        raise ValueError("negative edge costs rejected")
    dest = graph.index_of(graph.ch_id)
    dist, next_hop = _kernels.route_dp(graph.adj, graph.node_cost, dest)
    if np.any(np.isinf(dist)):
        raise IsolatedNodeError("unreachable member")
    cost = {}
    hops = {}
    for i, nid in enumerate(graph.vertex_ids):
        if nid == graph.ch_id:
            continue
        cost[nid] = float(dist[i])
        hops[nid] = graph.vertex_ids[int(next_hop[i])]
    return ClusterRoutes(cost, hops)


def build_branches(graph: ClusterGraph, routes: ClusterRoutes | None = None
                   ) -> list[Branch]:
    """One branch per member: its least-cost path to the head."""
    if routes is None:
        routes = all_pairs_routes(graph)
    out = []
    for nid in graph.vertex_ids:
        if nid == graph.ch_id:
            continue
        path = tuple(routes.path(nid, graph.ch_id))
        out.append(Branch(path, routes.cost[nid]))
    return out


def select_branch(branches: list[Branch]) -> Branch:
    """Most nodes first, cheapest second, lowest leading id third."""
    if not branches:
        raise ValueError("empty branch set")
    return min(branches,
               key=lambda b: (-b.node_count, b.total_cost, b.nodes))


class Dispatch(enum.Enum):
    REACTIVE = "reactive"
    PROACTIVE = "proactive"


def monitoring_dispatch(reading: float, margin: tuple[float, float]) -> Dispatch:
    """Readings beyond the hard margin forward immediately; in-margin
    readings (boundary inclusive) queue for the learned monitor."""
    low, high = margin
    if low > high:
        raise ValueError("margin low must not exceed high")
    if reading < low or reading > high:
        return Dispatch.REACTIVE
    return Dispatch.PROACTIVE
