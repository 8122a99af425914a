"""Centralized cluster-head hierarchy.

The sink estimates node distances from RSSI, elects cluster heads from an
energy-weighted rotation threshold, sizes each cluster radius by distance,
and partitions nodes with a multiplicatively weighted Voronoi rule.  The
radius weight alpha is driven to a fixed point of the normalized
residual-energy-per-radius ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import Network

# Partition guard for degenerate radii.  Eq-range radii can reach exactly
# zero at full energy (alpha = 1), which would empty the nearest-to-sink
# cell entirely; treating tiny radii as a minimal usable cell keeps such
# heads serving their overwhelming-nearest neighbors instead of pushing
# them onto heads hundreds of meters away.
RADIUS_FLOOR = 0.5


class ElectionDegenerateError(ValueError):
    """Rotation denominator hit zero; the caller should reset r."""


class DegenerateGeometryError(ValueError):
    """All estimated distances coincide; no radius gradient exists."""


@dataclass
class ChElectionParams:
    p: float = 0.05
    r: int = 0
    campaign_threshold: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError("p must be in (0, 1]")
        if self.r < 0:
            raise ValueError("r must be non-negative")
        if not 0.0 <= self.campaign_threshold <= 1.0:
            raise ValueError("campaign_threshold must be in [0, 1]")


@dataclass
class VoronoiParams:
    alpha: float = 1.0
    tol: float = 1e-3
    max_iter: int = 50

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")


@dataclass
class ClusterLayout:
    heads: list[int]
    radii: list[float]
    assignment: dict[int, int]
    alpha: float = 1.0
    converged: bool = True

    def members(self, cluster: int) -> list[int]:
        return sorted(n for n, c in self.assignment.items() if c == cluster)

    def to_record(self, round_index: int) -> dict:
        return {
            "round": round_index,
            "heads": list(self.heads),
            "radii": list(self.radii),
            "assignment": {str(k): v for k, v in sorted(self.assignment.items())},
        }


# ------------------------------------------------------------- RSSI model

RSSI_REF_DB = -40.0  # received power at 1 m
RSSI_SLOPE_DB = 20.0  # 10 * path loss exponent


def rssi_reading(distance: float) -> float:
    """Log-distance received signal strength at `distance` meters."""
    return RSSI_REF_DB - RSSI_SLOPE_DB * math.log10(distance)


def invert_rssi(reading: float) -> float:
    """Distance estimate from a received signal strength reading."""
    return 10.0 ** ((RSSI_REF_DB - reading) / RSSI_SLOPE_DB)


def approximate_distances(network: Network, rng: np.random.Generator,
                          sigma_db: float = 0.0) -> dict[int, float]:
    """Estimated sink distance per alive node.

    The estimate inverts the log-distance model applied to the true
    distance, with optional Gaussian noise on the dB reading.  With noise
    disabled the inversion is skipped entirely so the estimate equals the
    true distance exactly.
    """
    out = {}
    for nid in network.alive_ids():
        d = network.distance_to_sink(nid)
        if sigma_db <= 0.0 or d <= 0.0:
            out[nid] = d
        else:
            reading = rssi_reading(d) + sigma_db * rng.standard_normal()
            out[nid] = invert_rssi(reading)
    return out


# ---------------------------------------------------------------- election


def ch_threshold(p: float, r: int, e_res: float, e_0: float) -> float:
    """Election score: rotation threshold scaled by residual energy fraction."""
    if not 0.0 < p <= 1.0:
        raise ValueError("p must be in (0, 1]")
    if e_0 <= 0.0:
        raise ValueError("e_0 must be positive")
    cluster_size = math.ceil(1.0 / p)
    denom = 1.0 - p * (r % cluster_size)
    if denom <= 0.0:
        raise ElectionDegenerateError("rotation denominator vanished")
    return (p / denom) * (e_res / e_0)


def campaign_trigger(rng: np.random.Generator, threshold: float) -> bool:
    """Draw u ~ U(0,1); a campaign runs when u < threshold."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    return float(rng.random()) < threshold


def select_cluster_heads(layout: ClusterLayout, network: Network,
                         params: ChElectionParams) -> list[int]:
    """Per cluster, the alive node with the largest election score becomes
    head (ties to the lowest id).  Empty clusters dissolve.  Increments the
    re-selection counter."""
    new_heads = []
    for cluster in range(len(layout.heads)):
        best_id = -1
        best_score = -1.0
        for nid in layout.members(cluster):
            node = network.nodes[nid]
            if not node.alive:
                continue
            score = ch_threshold(params.p, params.r, node.e_res, node.e_0)
            if score > best_score:
                best_score = score
                best_id = nid
        if best_id < 0:
            network.events.append(("cluster-dissolved", cluster))
            continue
        new_heads.append(best_id)
    params.r += 1
    return new_heads


# ---------------------------------------------------------------- geometry


def cluster_radius(d: float, d_max: float, d_min: float, alpha: float) -> float:
    """Normalized cluster radius: 1 at the farthest node, 1 - alpha at the
    nearest."""
    if d_max <= d_min:
        raise DegenerateGeometryError("no distance spread")
    if not d_min <= d <= d_max:
        raise ValueError("d outside [d_min, d_max]")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    return 1.0 - alpha * (d_max - d) / (d_max - d_min)


def _radii_for_heads(heads: list[int], est: dict[int, float], d_max: float,
                     d_min: float, alpha: float) -> list[float]:
    if d_max <= d_min:
        return [1.0 for _ in heads]
    return [cluster_radius(est[h], d_max, d_min, alpha) for h in heads]


def voronoi_partition(heads: list[int], radii: list[float],
                      node_ids: list[int], positions: np.ndarray) -> dict[int, int]:
    """Assign each node to the head minimizing distance over radius.

    Heads must be in ascending id order so that ties resolve to the lowest
    head id; each head lands in its own cluster.
    """
    if not heads:
        raise ValueError("at least one head required")
    if list(heads) != sorted(heads):
        raise ValueError("heads must be sorted ascending")
    node_pos = positions[node_ids]
    head_pos = positions[heads]
    guarded = np.maximum(np.array(radii, dtype=np.float64), RADIUS_FLOOR)
    picks = _kernels.voronoi_assign(node_pos, head_pos, guarded)
    assignment = {nid: int(picks[k]) for k, nid in enumerate(node_ids)}
    for idx, h in enumerate(heads):
        assignment[h] = idx
    return assignment


def converge_alpha(network: Network, heads: list[int], est: dict[int, float],
                   params: VoronoiParams) -> ClusterLayout:
    """Fixed-point iteration on the radius weight.

    Each pass recomputes radii and the partition, then updates alpha to the
    residual-over-initial energy ratio of the alive population (the raw
    energy-per-radius ratio normalized by its full-energy value, which
    cancels the radius sum).  Stops when alpha moves less than tol.
    """
    heads = sorted(heads)
    alive = network.alive_ids()
    dists = [est[n] for n in alive]
    d_max, d_min = max(dists), min(dists)
    positions = network.positions()
    e_res = sum(network.nodes[n].e_res for n in alive)
    e_0 = sum(network.nodes[n].e_0 for n in alive)
    target = min(1.0, max(0.0, e_res / e_0))

    alpha = params.alpha
    radii = _radii_for_heads(heads, est, d_max, d_min, alpha)
    assignment = voronoi_partition(heads, radii, alive, positions)
    converged = False
    for _ in range(params.max_iter):
        radii = _radii_for_heads(heads, est, d_max, d_min, alpha)
        assignment = voronoi_partition(heads, radii, alive, positions)
        if abs(target - alpha) < params.tol:
            converged = True
            break
        alpha = target
    if not converged:
        network.events.append(("alpha-no-convergence", alpha))
    return ClusterLayout(list(heads), radii, assignment, alpha, converged)


def initial_layout(network: Network, est: dict[int, float], n_clusters: int,
                   rng: np.random.Generator, params: VoronoiParams) -> ClusterLayout:
    """Start-up grouping: 1-D k-means over estimated sink distances, one
    randomly chosen head per group, then the weighted-Voronoi refinement."""
    alive = network.alive_ids()
    if not alive:
        raise ValueError("no alive nodes")
    k = min(n_clusters, len(alive))
    dists = np.array([est[n] for n in alive])
    centers = np.quantile(dists, (np.arange(k) + 0.5) / k)
    groups = np.zeros(len(alive), dtype=np.int64)
    for _ in range(50):
        new_groups = np.argmin(np.abs(dists[:, None] - centers[None, :]), axis=1)
        if np.array_equal(new_groups, groups):
            break
        groups = new_groups
        for g in range(k):
            mask = groups == g
            if mask.any():
                centers[g] = dists[mask].mean()
    heads = []
    for g in range(k):
        member_ids = [alive[i] for i in range(len(alive)) if groups[i] == g]
        if member_ids:
            heads.append(int(rng.choice(member_ids)))
    return converge_alpha(network, sorted(heads), est, params)
