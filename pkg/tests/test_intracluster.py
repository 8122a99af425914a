"""Tests for the cluster cost function, head-bound routing and dispatch."""

import numpy as np
import pytest

import oracles
from wsnopt.intracluster import (
    Branch,
    Dispatch,
    IsolatedNodeError,
    LinkCostParams,
    all_pairs_routes,
    build_branches,
    build_cluster_graph,
    link_cost,
    monitoring_dispatch,
    select_branch,
)
from wsnopt.model import NodeState, Network, Role, derive_rng, place_nodes

import math


def line_network(xs):
    nodes = [NodeState(i, (float(x), 0.0), 1.0, 1.0) for i, x in enumerate(xs)]
    sink = NodeState(-1, (0.0, 500.0), math.inf, math.inf, role=Role.SINK)
    return Network(nodes, sink, (max(xs) + 1.0, 10.0))


# ---------------------------------------------------------------- cost


def test_link_cost_single_connection():
    assert link_cost(1, 0.6, 0.9, 0.1, 0.5) == pytest.approx(0.6)


def test_link_cost_hand_case():
    assert link_cost(2, 0.6, 0.8, 0.4, 0.5) == pytest.approx(0.6)


def test_link_cost_mu_zero_ignores_quality():
    got = link_cost(4, 0.2, 0.9, 0.4, 0.0)
    assert got == pytest.approx(0.25 * 0.2 + 0.75 * 0.4)


def test_link_cost_isolated_node():
    with pytest.raises(IsolatedNodeError):
        link_cost(0, 0.5, 0.5, 0.5, 0.5)


def test_link_cost_input_validation():
    with pytest.raises(ValueError):
        link_cost(2, 1.5, 0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        link_cost(2, 0.5, 0.5, 0.5, -0.1)
    with pytest.raises(ValueError):
        LinkCostParams(mu=1.2)


# ---------------------------------------------------------------- graph


def test_graph_annotations_in_range():
    net = place_nodes(12, (50.0, 50.0), (25.0, 80.0), 1.0,
                      derive_rng(4, "placement"))
    g = build_cluster_graph(net, list(range(11)), 11, 25.0, LinkCostParams())
    assert g.n == 12
    assert np.array_equal(g.adj, g.adj.T)
    assert np.all(g.node_cost >= 0.0) and np.all(g.node_cost <= 1.0)
    assert np.all(g.d_c >= 0.0) and np.all(g.d_c <= 1.0)
    assert np.all(g.l_qi >= 0.0) and np.all(g.l_qi <= 1.0)
    assert np.all(g.n_c >= 1)


def test_graph_grows_range_until_connected():
    net = line_network([0.0, 100.0, 200.0])
    g = build_cluster_graph(net, [0, 1], 2, 10.0, LinkCostParams())
    assert g.range_growths > 0
    assert g.comm_range >= 100.0


# ---------------------------------------------------------------- routes


def test_routes_single_member():
    net = line_network([0.0, 5.0])
    g = build_cluster_graph(net, [0], 1, 10.0, LinkCostParams())
    routes = all_pairs_routes(g)
    assert routes.next_hop == {0: 1}
    assert routes.cost[0] == pytest.approx(float(g.node_cost[0]))


def test_routes_chain_counts_hops():
    net = line_network([0.0, 10.0, 20.0, 30.0])
    g = build_cluster_graph(net, [0, 1, 2], 3, 12.0, LinkCostParams())
    routes = all_pairs_routes(g)
    assert routes.path(0, 3) == [0, 1, 2, 3]
    assert routes.path(1, 3) == [1, 2, 3]
    assert routes.path(2, 3) == [2, 3]
    assert routes.cost[0] == pytest.approx(
        float(g.node_cost[0] + g.node_cost[1] + g.node_cost[2]))


def test_routes_match_classic_floyd_warshall():
    rng = np.random.default_rng(12)
    for _ in range(50):
        n = int(rng.integers(3, 11))
        net = place_nodes(n, (60.0, 60.0), (30.0, 90.0), 1.0,
                          derive_rng(int(rng.integers(1e6)), "placement"))
        for node in net.nodes:
            node.e_res = float(rng.uniform(0.1, 1.0))
        ch = int(rng.integers(0, n))
        members = [i for i in range(n) if i != ch]
        g = build_cluster_graph(net, members, ch, 30.0, LinkCostParams())
        # dyadic-quantized costs make sums order-independent and exact
        g.node_cost[:] = np.round(g.node_cost * 1024.0) / 1024.0
        routes = all_pairs_routes(g)
        weight = np.full((g.n, g.n), np.inf)
        for i in range(g.n):
            for j in range(g.n):
                if g.adj[i, j]:
                    weight[i, j] = g.node_cost[i]
        fw = oracles.floyd_warshall(weight)
        dest = g.index_of(ch)
        for i, nid in enumerate(g.vertex_ids):
            if nid != ch:
                assert routes.cost[nid] == fw[i, dest]


# ---------------------------------------------------------------- branches


def test_branches_two_node_cluster():
    net = line_network([0.0, 5.0])
    g = build_cluster_graph(net, [0], 1, 10.0, LinkCostParams())
    branches = build_branches(g)
    assert len(branches) == 1
    assert branches[0].nodes == (0, 1)
    assert branches[0].node_count == 1


def test_branches_star_topology():
    nodes = [NodeState(0, (0.0, 10.0), 1.0, 1.0),
             NodeState(1, (10.0, 0.0), 1.0, 1.0),
             NodeState(2, (0.0, -10.0), 1.0, 1.0),
             NodeState(3, (0.0, 0.0), 1.0, 1.0)]
    sink = NodeState(-1, (0.0, 500.0), math.inf, math.inf, role=Role.SINK)
    net = Network(nodes, sink, (20.0, 20.0))
    g = build_cluster_graph(net, [0, 1, 2], 3, 12.0, LinkCostParams())
    branches = build_branches(g)
    assert sorted(b.nodes for b in branches) == [(0, 3), (1, 3), (2, 3)]
    assert all(b.node_count == 1 for b in branches)


def test_branches_chain_covers_all_nodes():
    net = line_network([0.0, 10.0, 20.0, 30.0])
    g = build_cluster_graph(net, [0, 1, 2], 3, 12.0, LinkCostParams())
    branches = build_branches(g)
    assert (0, 1, 2, 3) in [b.nodes for b in branches]
    covered = set()
    for b in branches:
        covered.update(b.nodes)
    assert covered == {0, 1, 2, 3}


def test_select_branch_rules():
    b1 = Branch((1, 2, 9, 0), 5.0)
    b2 = Branch((3, 0), 1.0)
    assert select_branch([b2, b1]) is b1  # node count dominates
    b3 = Branch((4, 2, 9, 0), 4.0)
    assert select_branch([b1, b3]) is b3  # then cost
    b4 = Branch((2, 5, 9, 0), 4.0)
    assert select_branch([b4, b3]) is b4  # then first-node id
    assert select_branch([Branch((7, 0), 2.0)]).nodes == (7, 0)
    with pytest.raises(ValueError):
        select_branch([])


# ---------------------------------------------------------------- dispatch


def test_dispatch_rules():
    assert monitoring_dispatch(2.0, (0.0, 1.0)) is Dispatch.REACTIVE
    assert monitoring_dispatch(0.5, (0.0, 1.0)) is Dispatch.PROACTIVE
    assert monitoring_dispatch(1.0, (0.0, 1.0)) is Dispatch.PROACTIVE
    assert monitoring_dispatch(0.0, (0.0, 1.0)) is Dispatch.PROACTIVE
    assert monitoring_dispatch(-0.001, (0.0, 1.0)) is Dispatch.REACTIVE
    with pytest.raises(ValueError):
        monitoring_dispatch(0.5, (1.0, 0.0))


# ---------------------------------------------------------------- properties
# 10,000 generated cases across the module invariants.


def test_property_cost_bounds_selection_routing_dispatch():
    rng = np.random.default_rng(99)
    cases = 0
    while cases < 10_000:
        # cost stays in [0, 1] for normalized inputs
        for _ in range(4):
            c = link_cost(int(rng.integers(1, 12)), float(rng.random()),
                          float(rng.random()), float(rng.random()),
                          float(rng.random()))
            assert 0.0 <= c <= 1.0
            cases += 1

        # selection is total, deterministic and permutation-stable
        k = int(rng.integers(1, 7))
        branches = []
        for _ in range(k):
            length = int(rng.integers(1, 5))
            nodes = tuple(int(v) for v in rng.choice(50, length, replace=False)) + (99,)
            branches.append(Branch(nodes, float(rng.integers(0, 5))))
        picked = select_branch(branches)
        shuffled = list(branches)
        rng.shuffle(shuffled)
        again = select_branch(shuffled)
        assert (again.nodes, again.total_cost) == (picked.nodes, picked.total_cost)
        assert picked.node_count == max(b.node_count for b in branches)
        cases += 1

        # route optimality against exhaustive path enumeration
        n = int(rng.integers(3, 9))
        net = place_nodes(n, (40.0, 40.0), (20.0, 60.0), 1.0,
                          derive_rng(int(rng.integers(1e6)), "placement"))
        ch = int(rng.integers(0, n))
        g = build_cluster_graph(net, [i for i in range(n) if i != ch], ch,
                                25.0, LinkCostParams())
        routes = all_pairs_routes(g)
        dest = g.index_of(ch)
        probe = int(rng.integers(0, n))
        if probe != dest:
            best = np.inf
            for path in oracles.all_simple_paths(g.adj, probe, dest):
                cost = sum(float(g.node_cost[u]) for u in path[:-1])
                best = min(best, cost)
            nid = g.vertex_ids[probe]
            assert routes.cost[nid] <= best + 1e-12
        cases += 1

        # dispatch dichotomy
        lo = float(rng.uniform(-1.0, 1.0))
        hi = lo + float(rng.uniform(0.0, 2.0))
        reading = float(rng.uniform(-3.0, 3.0))
        outcome = monitoring_dispatch(reading, (lo, hi))
        assert outcome in (Dispatch.REACTIVE, Dispatch.PROACTIVE)
        assert (outcome is Dispatch.PROACTIVE) == (lo <= reading <= hi)
        cases += 1
