"""Network ground truth: node states, geometry, the radio energy model and
the deterministic random-number contract shared by every stochastic stage.

All randomness in the simulator flows through generators produced by
:func:`derive_rng`, which maps (seed, purpose tags) to an independent
deterministic stream.  Two runs with the same seed and the same call
sequence therefore produce identical results.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class Role(Enum):
    MEMBER = "member"
    CLUSTER_HEAD = "cluster-head"
    SINK = "sink"


def derive_rng(seed: int, *tags) -> np.random.Generator:
    """Deterministic per-purpose generator.

    The tags (strings or ints) are hashed into a SeedSequence spawn key, so
    streams for different purposes are independent and stable across runs
    and platforms.
    """
    key = tuple(
        int.from_bytes(hashlib.sha256(str(t).encode()).digest()[:4], "little")
        for t in tags
    )
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def euclidean_distance(a, b) -> float:
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    return math.sqrt(dx * dx + dy * dy)


@dataclass
class EnergyModel:
    """First-order radio model: per-bit electronics plus amplifier term.

    tx = bits * (e_elec + e_amp * d^gamma), rx = bits * e_elec.
    """

    e_elec: float = 50e-9
    e_amp: float = 100e-12
    path_loss_exp: int = 2
    packet_bits: int = 4000

    def __post_init__(self):
        if self.e_elec <= 0 or self.e_amp <= 0:
            raise ValueError("energy coefficients must be strictly positive")
        if self.path_loss_exp not in (2, 4):
            raise ValueError("path loss exponent must be 2 or 4")
        if self.packet_bits <= 0:
            raise ValueError("packet_bits must be positive")


def tx_energy(model: EnergyModel, bits: int, distance: float) -> float:
    """Energy to transmit `bits` over `distance` meters."""
    if bits < 0 or distance < 0:
        raise ValueError("bits and distance must be non-negative")
    d2 = distance * distance
    amp = d2 if model.path_loss_exp == 2 else d2 * d2
    return bits * (model.e_elec + model.e_amp * amp)


def rx_energy(model: EnergyModel, bits: int) -> float:
    """Energy to receive `bits` (distance independent)."""
    if bits < 0:
        raise ValueError("bits must be non-negative")
    return bits * model.e_elec


@dataclass
class NodeState:
    """One mote: position, energy bookkeeping, liveness and role."""

    id: int
    position: tuple[float, float]
    e_res: float
    e_0: float
    alive: bool = True
    role: Role = Role.MEMBER


class Network:
    """The sensor field: member nodes plus one sink outside the field.

    The sink never loses energy.  Node ids are unique and index into
    ``nodes`` directly.
    """

    def __init__(self, nodes: list[NodeState], sink: NodeState,
                 field_dims: tuple[float, float], death_threshold: float = 0.0):
        ids = [n.id for n in nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("node ids must be unique")
        if ids != list(range(len(nodes))):
            raise ValueError("node ids must be 0..n-1")
        if sink.role is not Role.SINK:
            raise ValueError("sink must carry the sink role")
        self.nodes = nodes
        self.sink = sink
        self.field_dims = field_dims
        self.death_threshold = death_threshold
        self.events: list[tuple] = []

    @property
    def n(self) -> int:
        return len(self.nodes)

    def alive_ids(self) -> list[int]:
        return [n.id for n in self.nodes if n.alive]

    def dead_count(self) -> int:
        return sum(1 for n in self.nodes if not n.alive)

    def total_energy(self) -> float:
        return sum(n.e_res for n in self.nodes)

    def positions(self) -> np.ndarray:
        return np.array([n.position for n in self.nodes], dtype=np.float64)

    def energies(self) -> np.ndarray:
        return np.array([n.e_res for n in self.nodes], dtype=np.float64)

    def drain(self, node_id: int, amount: float) -> float:
        """Charge `amount` joules to a node; returns the effective drain.

        Clamps at zero and updates liveness against the death threshold.
        Draining a dead node is a logged no-op, never an error.
        """
        if amount < 0:
            raise ValueError("drain amount must be non-negative")
        node = self.nodes[node_id]
        if not node.alive:
            self.events.append(("dead-drain", node_id, amount))
            return 0.0
        remaining = node.e_res - amount
        effective = min(node.e_res, amount)
        node.e_res = max(0.0, remaining)
        if remaining < self.death_threshold:
            node.alive = False
        return effective

    def distance_to_sink(self, node_id: int) -> float:
        return euclidean_distance(self.nodes[node_id].position, self.sink.position)


def place_nodes(n: int, field_dims: tuple[float, float], sink_pos: tuple[float, float],
                initial_energy: float, rng: np.random.Generator,
                death_threshold: float = 0.0) -> Network:
    """Uniform random placement of n nodes in the field, sink outside it."""
    w, h = field_dims
    xs = rng.uniform(0.0, w, size=n)
    ys = rng.uniform(0.0, h, size=n)
    nodes = [
        NodeState(i, (float(xs[i]), float(ys[i])), initial_energy, initial_energy)
        for i in range(n)
    ]
    sink = NodeState(-1, (float(sink_pos[0]), float(sink_pos[1])),
                     math.inf, math.inf, role=Role.SINK)
    return Network(nodes, sink, field_dims, death_threshold)


@dataclass
class RoundMetrics:
    """Per-round network statistics collected by the engine."""

    round_index: int
    packets_delivered: int
    dead_nodes: int
    total_energy: float
