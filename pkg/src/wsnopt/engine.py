"""Round-based protocol engine.

Three protocols share one radio accounting core: classic LEACH (random
rotation, single-hop, direct CH uplink), LEACH-EEE (energy-weighted
rotation with super-head relaying) and the optimized stack (weighted
Voronoi clusters, score-based head election, cost-driven multi-hop
collection inside clusters, colony-built inter-head tree).

Packet accounting is logical: every head that gets its aggregate to the
sink counts one packet per merged head payload; member readings fold into
their head's aggregate and are not counted separately.  Rounds with no
head fall back to direct node-to-sink traffic where each arrival counts
one packet.

Every energy charge goes through one choke point so a run can optionally
record a replayable drain log for exact conservation audits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .aco import ChGraph, RoutingTree, build_ch_graph, run_aco
from .clustering import (ChElectionParams, ClusterLayout, approximate_distances,
                         campaign_trigger, ch_threshold, converge_alpha,
                         initial_layout, select_cluster_heads)
from .config import ScenarioConfig
from .intracluster import (ClusterGraph, ClusterRoutes, Dispatch,
                           all_pairs_routes, build_cluster_graph,
                           monitoring_dispatch)
from .model import (Network, RoundMetrics, derive_rng, euclidean_distance,
                    place_nodes, rx_energy, tx_energy)


class SetupError(RuntimeError):
    """Scenario cannot be realized (for example a fixed range too short)."""


@dataclass
class SimulationState:
    """Everything that evolves across rounds for one run."""

    config: ScenarioConfig
    network: Network
    est: dict[int, float]
    election: ChElectionParams
    round_index: int = 0
    packets_total: int = 0
    first_dead_round: int | None = None
    death_round: int | None = None
    layout: ClusterLayout | None = None
    routing: RoutingTree | None = None
    ch_graph: ChGraph | None = None
    leach_g: set[int] = dc_field(default_factory=set)
    leach_r: int = 0
    camp_rng: np.random.Generator | None = None
    aco_rng: np.random.Generator | None = None
    elect_rng: np.random.Generator | None = None
    reading_rng: np.random.Generator | None = None
    energy_log: list[tuple[int, float]] | None = None
    intra_cache: dict[int, tuple[tuple[int, ...], ClusterGraph, ClusterRoutes]] = dc_field(
        default_factory=dict)
    monitor_reactive: int = 0
    monitor_proactive: int = 0
    monitor_queue: list[int] = dc_field(default_factory=list)
    monitor_latency_sum: int = 0
    monitor_processed: int = 0


def is_network_dead(network: Network) -> bool:
    """Dead once at least half the population has drained out."""
    return network.dead_count() >= (network.n + 1) // 2


def _charge(state: SimulationState, node_id: int, amount: float) -> bool:
    """Drain a node, log the request, report whether it paid in full."""
    effective = state.network.drain(node_id, amount)
    if state.energy_log is not None:
        state.energy_log.append((node_id, amount))
    return effective == amount


def _hop(state: SimulationState, u: int, v: int, bits: int) -> bool:
    """One radio hop u -> v.  v == -1 is the sink (free reception)."""
    net = state.network
    if not net.nodes[u].alive:
        return False
    if v == -1:
        d = net.distance_to_sink(u)
    else:
        d = euclidean_distance(net.nodes[u].position, net.nodes[v].position)
    if not _charge(state, u, tx_energy(state.config.energy, bits, d)):
        return False
    if v == -1:
        return True
    return _charge(state, v, rx_energy(state.config.energy, bits))


def _aggregate(state: SimulationState, head: int, n_inputs: int) -> bool:
    """Fuse n_inputs packets at a head; returns False if it dies doing so."""
    if n_inputs <= 0:
        return state.network.nodes[head].alive
    cost = state.config.aggregation_per_bit * state.config.energy.packet_bits * n_inputs
    return _charge(state, head, cost)


def _direct_fallback(state: SimulationState, senders: list[int]):
    """No heads this round: everyone uplinks straight to the sink."""
    bits = state.config.energy.packet_bits
    for nid in senders:
        if state.network.nodes[nid].alive and _hop(state, nid, -1, bits):
            state.packets_total += 1


# ------------------------------------------------------------- optimized


def _cluster_extent(net: Network, members: list[int], head: int) -> float:
    hp = net.nodes[head].position
    dists = [euclidean_distance(net.nodes[m].position, hp)
             for m in members if m != head]
    return max(dists) if dists else 0.0


def _intra_range(cfg: ScenarioConfig, net: Network, members: list[int],
                 head: int) -> float:
    if cfg.intra_comm_range is not None:
        return cfg.intra_comm_range
    hp = net.nodes[head].position
    dists = [euclidean_distance(net.nodes[m].position, hp)
             for m in members if m != head]
    if not dists:
        return 1.0
    return max(2.0 * float(np.mean(dists)), 1e-3)


def _rebuild_backbone(state: SimulationState):
    """Head set changed: rebuild the head graph and the colony tree."""
    cfg = state.config
    net = state.network
    state.intra_cache.clear()
    heads = [h for h in state.layout.heads
             if net.nodes[h].alive]
    if not heads:
        state.routing = None
        state.ch_graph = None
        return
    extents = []
    for c, h in enumerate(state.layout.heads):
        if not net.nodes[h].alive:
            continue
        alive_members = [m for m in state.layout.members(c)
                         if net.nodes[m].alive]
        extents.append(_cluster_extent(net, alive_members, h))
    graph = build_ch_graph(net.positions(), net.energies(), heads,
                           state.config.sink_pos,
                           member_radii=extents or None,
                           comm_range=cfg.inter_comm_range)
    if cfg.inter_comm_range is not None and graph.range_growths > 0:
        # A configured range must carry the initial topology; later rounds
        # may outgrow it as heads die, which the radio absorbs by boosting.
        if state.round_index == 0 and state.routing is None:
            raise SetupError(
                "inter_comm_range leaves the head graph disconnected; "
                "increase it or leave it unset")
        net.events.append(("inter-range-boost", state.round_index,
                           graph.comm_range))
    state.ch_graph = graph
    n_res = len(net.alive_ids())
    state.routing = run_aco(graph, cfg.energy, cfg.aco, n_res, state.aco_rng)


def _promote_dead_heads(state: SimulationState) -> bool:
    """Replace dead heads with their best-scoring alive member."""
    net = state.network
    changed = False
    for c, head in enumerate(state.layout.heads):
        if net.nodes[head].alive:
            continue
        best_id = -1
        best_score = -1.0
        for nid in state.layout.members(c):
            node = net.nodes[nid]
            if not node.alive:
                continue
            score = ch_threshold(state.election.p, state.election.r,
                                 node.e_res, node.e_0)
            if score > best_score:
                best_score = score
                best_id = nid
        if best_id >= 0:
            state.layout.heads[c] = best_id
            net.events.append(("head-promoted", c, best_id))
        changed = True
    return changed


def _intra_routes(state: SimulationState, cluster: int, head: int,
                  members: list[int]) -> ClusterRoutes | None:
    """Cached per-cluster route table, rebuilt when membership shifts."""
    cfg = state.config
    key = tuple(members)
    hit = state.intra_cache.get(cluster)
    if hit is not None and hit[0] == key:
        return hit[2]
    if not members:
        return None
    rng_range = _intra_range(cfg, state.network, members, head)
    graph = build_cluster_graph(state.network, members, head, rng_range,
                                cfg.cost)
    if cfg.intra_comm_range is not None and graph.range_growths > 0:
        # Strict only for the starting topology; afterwards deaths can
        # split a cluster and the radio boosts through it.
        if state.round_index == 0:
            raise SetupError(
                "intra_comm_range leaves a cluster disconnected; "
                "increase it or leave it unset")
        state.network.events.append(("intra-range-boost", state.round_index,
                                     graph.comm_range))
    routes = all_pairs_routes(graph)
    state.intra_cache[cluster] = (key, graph, routes)
    return routes


def _collect_cluster(state: SimulationState, cluster: int, head: int) -> int:
    """Run the in-cluster collection phase; returns packets at the head."""
    net = state.network
    bits = state.config.energy.packet_bits
    members = [m for m in state.layout.members(cluster)
               if m != head and net.nodes[m].alive]
    arrived = 0
    if members:
        routes = _intra_routes(state, cluster, head, members)
        for m in members:
            if not net.nodes[m].alive:
                continue
            path = routes.path(m, head)
            delivered = True
            for u, v in zip(path, path[1:]):
                if not _hop(state, u, v, bits):
                    delivered = False
                    break
            if delivered:
                arrived += 1
    return arrived


def _tree_order(heads: list[int], routing: RoutingTree) -> list[int]:
    """Topological order (children before parents), ties by id."""
    children: dict[int, int] = {h: 0 for h in heads}
    for h in heads:
        nxt = routing.next_hop.get(h, -1)
        if nxt in children:
            children[nxt] += 1
    ready = sorted(h for h in heads if children[h] == 0)
    order = []
    pending = dict(children)
    while ready:
        h = ready.pop(0)
        order.append(h)
        nxt = routing.next_hop.get(h, -1)
        if nxt in pending:
            pending[nxt] -= 1
            if pending[nxt] == 0:
                ready.append(nxt)
                ready.sort()
    # Cycles cannot survive the loop-free merge, but stay total anyway.
    for h in sorted(heads):
        if h not in order:
            order.append(h)
    return order


def _optimized_round(state: SimulationState):
    cfg = state.config
    net = state.network
    t = state.round_index

    rebuild = False
    if t > 0 and t % cfg.rounds_per_campaign == 0:
        if campaign_trigger(state.camp_rng, state.election.campaign_threshold):
            heads = select_cluster_heads(state.layout, net, state.election)
            if heads:
                state.layout = converge_alpha(net, heads, state.est,
                                              cfg.voronoi)
            rebuild = True
    if _promote_dead_heads(state):
        rebuild = True
    if rebuild or state.routing is None:
        _rebuild_backbone(state)

    alive_heads = [h for h in state.layout.heads if net.nodes[h].alive]
    if not alive_heads or state.routing is None:
        _direct_fallback(state, net.alive_ids())
        return

    # Collection phase, clusters in index order.
    outbound: dict[int, int] = {}
    for c, head in enumerate(state.layout.heads):
        if not net.nodes[head].alive:
            continue
        arrived = _collect_cluster(state, c, head)
        if not net.nodes[head].alive:
            continue
        if _aggregate(state, head, arrived + 1):
            outbound[head] = 1

    # Uplink phase along the colony tree, leaves first.
    bits = cfg.energy.packet_bits
    for h in _tree_order(list(outbound), state.routing):
        carried = outbound.get(h, 0)
        if carried <= 0 or not net.nodes[h].alive:
            continue
        nxt = state.routing.next_hop.get(h, -1)
        if nxt != -1 and (nxt not in state.routing.next_hop
                          or not net.nodes[nxt].alive):
            nxt = -1
        if not _hop(state, h, nxt, bits):
            continue
        if nxt == -1:
            state.packets_total += carried
        else:
            if _aggregate(state, nxt, 1):
                outbound[nxt] = outbound.get(nxt, 0) + carried


# ------------------------------------------------------------- baselines


def _rotation_elect(state: SimulationState, energy_weighted: bool) -> list[int]:
    """Shared LEACH-style rotation; returns this round's heads."""
    net = state.network
    p = state.config.p
    cycle = max(1, math.ceil(1.0 / p))
    if state.leach_r % cycle == 0:
        state.leach_g.clear()
    denom = 1.0 - p * (state.leach_r % cycle)
    heads = []
    for nid in net.alive_ids():
        if nid in state.leach_g:
            continue
        node = net.nodes[nid]
        if energy_weighted:
            thr = ch_threshold(p, state.leach_r, node.e_res, node.e_0)
        else:
            thr = p / denom if denom > 1e-12 else 1.0
        if state.elect_rng.random() < thr:
            heads.append(nid)
            state.leach_g.add(nid)
    state.leach_r += 1
    return heads


def _nearest(net: Network, nid: int, candidates: list[int]) -> int:
    pos = net.nodes[nid].position
    return min(candidates,
               key=lambda h: (euclidean_distance(pos, net.nodes[h].position), h))


def _member_uplink(state: SimulationState, heads: list[int]) -> dict[int, int]:
    """Members join the nearest head, single hop; returns arrivals per head."""
    net = state.network
    bits = state.config.energy.packet_bits
    head_set = set(heads)
    arrived = {h: 0 for h in heads}
    for nid in net.alive_ids():
        if nid in head_set:
            continue
        h = _nearest(net, nid, heads)
        if _hop(state, nid, h, bits):
            arrived[h] += 1
    return arrived


def baseline_leach_round(state: SimulationState):
    """Classic rotation, single-hop join, direct head uplink."""
    net = state.network
    bits = state.config.energy.packet_bits
    heads = _rotation_elect(state, energy_weighted=False)
    if not heads:
        _direct_fallback(state, net.alive_ids())
        return
    arrived = _member_uplink(state, heads)
    for h in heads:
        if not net.nodes[h].alive:
            continue
        if not _aggregate(state, h, arrived[h] + 1):
            continue
        if _hop(state, h, -1, bits):
            state.packets_total += 1


def baseline_leach_eee_round(state: SimulationState):
    """Energy-weighted rotation with super-head relaying to the sink."""
    net = state.network
    bits = state.config.energy.packet_bits
    heads = _rotation_elect(state, energy_weighted=True)
    if not heads:
        _direct_fallback(state, net.alive_ids())
        return
    n_super = max(1, math.ceil(math.sqrt(len(heads))))
    supers = sorted(heads, key=lambda h: (-net.nodes[h].e_res, h))[:n_super]
    super_set = set(supers)

    arrived = _member_uplink(state, heads)
    carried = {h: 0 for h in supers}
    # Ordinary heads aggregate and relay to their nearest super-head.
    for h in heads:
        if h in super_set or not net.nodes[h].alive:
            continue
        if not _aggregate(state, h, arrived[h] + 1):
            continue
        s = _nearest(net, h, supers)
        if _hop(state, h, s, bits):
            carried[s] += 1
    # Super-heads fuse relayed aggregates with their own and uplink.
    for s in supers:
        if not net.nodes[s].alive:
            continue
        if not _aggregate(state, s, arrived[s] + 1 + carried[s]):
            continue
        if _hop(state, s, -1, bits):
            state.packets_total += 1 + carried[s]


# ------------------------------------------------------------ monitoring


def _monitor_round(state: SimulationState):
    """Classify one reading per alive node; queue borderline ones for the
    next recalibration round.  Classification never gates packets."""
    cfg = state.config
    if not cfg.monitor.enabled:
        return
    t = state.round_index
    if t > 0 and t % cfg.rounds_per_campaign == 0 and state.monitor_queue:
        for t_in in state.monitor_queue:
            state.monitor_latency_sum += t - t_in
        state.monitor_processed += len(state.monitor_queue)
        state.monitor_queue.clear()
    readings = state.reading_rng.random(len(state.network.alive_ids()))
    for val in readings:
        if monitoring_dispatch(float(val), cfg.monitor.margin) is Dispatch.REACTIVE:
            state.monitor_reactive += 1
        else:
            state.monitor_proactive += 1
            state.monitor_queue.append(t)


# ------------------------------------------------------------- top level


def init_scenario(config: ScenarioConfig,
                  record_energy: bool = False) -> SimulationState:
    """Place the population and prepare protocol state for round zero."""
    net = place_nodes(config.node_count, config.field_dims, config.sink_pos,
                      config.initial_energy,
                      derive_rng(config.seed, "placement"),
                      config.death_threshold)
    est = approximate_distances(net, derive_rng(config.seed, "rssi"),
                                config.rssi_sigma_db)
    election = ChElectionParams(p=config.p, r=0,
                                campaign_threshold=config.campaign_threshold)
    state = SimulationState(
        config=config, network=net, est=est, election=election,
        camp_rng=derive_rng(config.seed, "campaign"),
        aco_rng=derive_rng(config.seed, "aco"),
        elect_rng=derive_rng(config.seed, "election"),
        reading_rng=derive_rng(config.seed, "readings"),
        energy_log=[] if record_energy else None,
    )
    if config.protocol == "optimized":
        state.layout = initial_layout(net, est, config.ch_count,
                                      derive_rng(config.seed, "startup"),
                                      config.voronoi)
        _rebuild_backbone(state)
    return state


def run_round(state: SimulationState) -> RoundMetrics:
    """Advance the simulation by one full round; returns its metrics."""
    if is_network_dead(state.network):
        raise ValueError("network is dead; no further rounds")
    _monitor_round(state)
    protocol = state.config.protocol
    if protocol == "optimized":
        _optimized_round(state)
    elif protocol == "leach":
        baseline_leach_round(state)
    else:
        baseline_leach_eee_round(state)
    net = state.network
    t = state.round_index
    if state.first_dead_round is None and net.dead_count() > 0:
        state.first_dead_round = t
    if state.death_round is None and is_network_dead(net):
        state.death_round = t
    state.round_index = t + 1
    return RoundMetrics(round_index=t,
                        packets_delivered=state.packets_total,
                        dead_nodes=net.dead_count(),
                        total_energy=net.total_energy())


def run_simulation(config: ScenarioConfig, record_energy: bool = False
                   ) -> tuple[list[RoundMetrics], dict, SimulationState]:
    """Run a full scenario; returns the per-round series, a summary dict
    and the final state."""
    state = init_scenario(config, record_energy)
    series: list[RoundMetrics] = []
    net = state.network
    for _ in range(config.rounds_max):
        if is_network_dead(net):
            break
        series.append(run_round(state))
    summary = {
        "first_dead_round": state.first_dead_round,
        "death_round": state.death_round,
        "total_packets": state.packets_total,
        "rounds_run": len(series),
        "seed": config.seed,
        "protocol": config.protocol,
    }
    if config.monitor.enabled:
        mean_latency = (state.monitor_latency_sum / state.monitor_processed
                        if state.monitor_processed else None)
        summary["monitor"] = {
            "reactive": state.monitor_reactive,
            "proactive": state.monitor_proactive,
            "processed": state.monitor_processed,
            "mean_latency_rounds": mean_latency,
        }
    return series, summary, state


def replay_energy_log(config: ScenarioConfig,
                      log: list[tuple[int, float]]) -> np.ndarray:
    """Re-derive final node energies from a drain log alone, using the
    same clamp arithmetic as the live network.  Bitwise comparable."""
    e = np.full(config.node_count, float(config.initial_energy))
    alive = np.ones(config.node_count, dtype=bool)
    for nid, amount in log:
        if not alive[nid]:
            continue
        remaining = e[nid] - amount
        e[nid] = max(0.0, remaining)
        if remaining < config.death_threshold:
            alive[nid] = False
    return e
