"""Scenario configuration: one dataclass mirrored field-for-field by the
JSON config file.  Loading is strict; unknown keys anywhere in the document
are rejected so typos never silently fall back to defaults.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .aco import AcoParams
from .clustering import VoronoiParams
from .intracluster import LinkCostParams
from .model import EnergyModel

PROTOCOLS = ("leach", "leach-eee", "optimized")


class ConfigError(ValueError):
    """Invalid or unparseable scenario configuration."""


@dataclass
class MonitorConfig:
    """Per-round reading dispatch; classification never gates packets."""

    enabled: bool = False
    margin_low: float = 0.2
    margin_high: float = 0.8

    def __post_init__(self):
        if not 0.0 <= self.margin_low <= self.margin_high <= 1.0:
            raise ConfigError("monitor margin must satisfy 0 <= low <= high <= 1")

    @property
    def margin(self) -> tuple[float, float]:
        return (self.margin_low, self.margin_high)


@dataclass
class ScenarioConfig:
    """Everything a run needs: population, field geometry, radio model and
    per-stage parameters.  The election probability defaults to the
    CH-to-node ratio when not set explicitly."""

    node_count: int = 200
    ch_count: int = 20
    field_dims: tuple[float, float] = (200.0, 200.0)
    sink_pos: tuple[float, float] = (100.0, 250.0)
    initial_energy: float = 1.0
    death_threshold: float = 0.0
    seed: int = 1
    rounds_max: int = 2000
    protocol: str = "optimized"
    rounds_per_campaign: int = 20
    rssi_sigma_db: float = 0.0
    aggregation_per_bit: float = 5e-9
    intra_comm_range: float | None = None
    inter_comm_range: float | None = None
    election_p: float | None = None
    campaign_threshold: float = 1.0
    energy: EnergyModel = field(default_factory=EnergyModel)
    voronoi: VoronoiParams = field(default_factory=VoronoiParams)
    aco: AcoParams = field(default_factory=AcoParams)
    cost: LinkCostParams = field(default_factory=LinkCostParams)
    monitor: MonitorConfig = field(default_factory=MonitorConfig)

    def __post_init__(self):
        if self.ch_count < 1 or self.node_count < self.ch_count:
            raise ConfigError("need node_count >= ch_count >= 1")
        if self.rounds_max < 0:
            raise ConfigError("rounds_max must be non-negative")
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}")
        if self.rounds_per_campaign < 1:
            raise ConfigError("rounds_per_campaign must be positive")
        if self.initial_energy <= 0.0:
            raise ConfigError("initial_energy must be positive")
        if self.aggregation_per_bit < 0.0:
            raise ConfigError("aggregation_per_bit must be non-negative")
        w, h = self.field_dims
        if w <= 0 or h <= 0:
            raise ConfigError("field dimensions must be positive")
        for r in (self.intra_comm_range, self.inter_comm_range):
            if r is not None and r <= 0:
                raise ConfigError("communication ranges must be positive")
        if self.election_p is not None and not 0.0 < self.election_p <= 1.0:
            raise ConfigError("election_p must be in (0, 1]")
        if not 0.0 <= self.campaign_threshold <= 1.0:
            raise ConfigError("campaign_threshold must be in [0, 1]")

    @property
    def p(self) -> float:
        if self.election_p is not None:
            return self.election_p
        return self.ch_count / self.node_count

    def to_dict(self) -> dict:
        return {
            "node_count": self.node_count,
            "ch_count": self.ch_count,
            "field_dims": list(self.field_dims),
            "sink_pos": list(self.sink_pos),
            "initial_energy": self.initial_energy,
            "death_threshold": self.death_threshold,
            "seed": self.seed,
            "rounds_max": self.rounds_max,
            "protocol": self.protocol,
            "rounds_per_campaign": self.rounds_per_campaign,
            "rssi_sigma_db": self.rssi_sigma_db,
            "aggregation_per_bit": self.aggregation_per_bit,
            "intra_comm_range": self.intra_comm_range,
            "inter_comm_range": self.inter_comm_range,
            "election": {
                "p": self.election_p,
                "campaign_threshold": self.campaign_threshold,
            },
            "energy": {
                "e_elec": self.energy.e_elec,
                "e_amp": self.energy.e_amp,
                "path_loss_exp": self.energy.path_loss_exp,
                "packet_bits": self.energy.packet_bits,
            },
            "voronoi": {
                "alpha": self.voronoi.alpha,
                "tol": self.voronoi.tol,
                "max_iter": self.voronoi.max_iter,
            },
            "aco": {
                "alpha_exp": self.aco.alpha_exp,
                "beta_exp": self.aco.beta_exp,
                "gamma_norm": self.aco.gamma_norm,
                "lambda_norm": self.aco.lambda_norm,
                "n_ants": self.aco.n_ants,
                "n_iter": self.aco.n_iter,
                "tau_min": self.aco.tau_min,
            },
            "cost": {"mu": self.cost.mu},
            "monitor": {
                "enabled": self.monitor.enabled,
                "margin_low": self.monitor.margin_low,
                "margin_high": self.monitor.margin_high,
            },
        }


def _require(d: dict, section: str, known: set[str]):
    unknown = set(d) - known
    if unknown:
        raise ConfigError(
            f"unknown key(s) in {section}: {', '.join(sorted(unknown))}")


def _number(d: dict, key: str, section: str, default, integer=False,
            optional=False):
    if key not in d:
        return default
    v = d[key]
    if optional and v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number")
    if integer:
        if v != int(v):
            raise ConfigError(f"{section}.{key} must be an integer")
        return int(v)
    return float(v)


def _pair(d: dict, key: str, default):
    if key not in d:
        return default
    v = d[key]
    if (not isinstance(v, (list, tuple)) or len(v) != 2
            or any(isinstance(x, bool) or not isinstance(x, (int, float))
                   for x in v)):
        raise ConfigError(f"{key} must be a pair of numbers")
    return (float(v[0]), float(v[1]))


def from_dict(doc: dict) -> ScenarioConfig:
    """Strict parse of a config document into a ScenarioConfig."""
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    top_keys = {
        "node_count", "ch_count", "field_dims", "sink_pos", "initial_energy",
        "death_threshold", "seed", "rounds_max", "protocol",
        "rounds_per_campaign", "rssi_sigma_db", "aggregation_per_bit",
        "intra_comm_range", "inter_comm_range", "election", "energy",
        "voronoi", "aco", "cost", "monitor",
    }
    _require(doc, "config", top_keys)
    base = ScenarioConfig()

    energy = doc.get("energy", {})
    _require(energy, "energy", {"e_elec", "e_amp", "path_loss_exp",
                                "packet_bits"})
    election = doc.get("election", {})
    _require(election, "election", {"p", "campaign_threshold"})
    voronoi = doc.get("voronoi", {})
    _require(voronoi, "voronoi", {"alpha", "tol", "max_iter"})
    aco = doc.get("aco", {})
    _require(aco, "aco", {"alpha_exp", "beta_exp", "gamma_norm",
                          "lambda_norm", "n_ants", "n_iter", "tau_min"})
    cost = doc.get("cost", {})
    _require(cost, "cost", {"mu"})
    monitor = doc.get("monitor", {})
    _require(monitor, "monitor", {"enabled", "margin_low", "margin_high"})
    if "enabled" in monitor and not isinstance(monitor["enabled"], bool):
        raise ConfigError("monitor.enabled must be a boolean")
    protocol = doc.get("protocol", base.protocol)
    if not isinstance(protocol, str):
        raise ConfigError("protocol must be a string")

    try:
        return ScenarioConfig(
            node_count=_number(doc, "node_count", "config", base.node_count,
                               integer=True),
            ch_count=_number(doc, "ch_count", "config", base.ch_count,
                             integer=True),
            field_dims=_pair(doc, "field_dims", base.field_dims),
            sink_pos=_pair(doc, "sink_pos", base.sink_pos),
            initial_energy=_number(doc, "initial_energy", "config",
                                   base.initial_energy),
            death_threshold=_number(doc, "death_threshold", "config",
                                    base.death_threshold),
            seed=_number(doc, "seed", "config", base.seed, integer=True),
            rounds_max=_number(doc, "rounds_max", "config", base.rounds_max,
                               integer=True),
            protocol=protocol,
            rounds_per_campaign=_number(doc, "rounds_per_campaign", "config",
                                        base.rounds_per_campaign,
                                        integer=True),
            rssi_sigma_db=_number(doc, "rssi_sigma_db", "config",
                                  base.rssi_sigma_db),
            aggregation_per_bit=_number(doc, "aggregation_per_bit", "config",
                                        base.aggregation_per_bit),
            intra_comm_range=_number(doc, "intra_comm_range", "config", None,
                                     optional=True),
            inter_comm_range=_number(doc, "inter_comm_range", "config", None,
                                     optional=True),
            election_p=_number(election, "p", "election", None, optional=True),
            campaign_threshold=_number(election, "campaign_threshold",
                                       "election", base.campaign_threshold),
            energy=EnergyModel(
                e_elec=_number(energy, "e_elec", "energy",
                               base.energy.e_elec),
                e_amp=_number(energy, "e_amp", "energy", base.energy.e_amp),
                path_loss_exp=_number(energy, "path_loss_exp", "energy",
                                      base.energy.path_loss_exp,
                                      integer=True),
                packet_bits=_number(energy, "packet_bits", "energy",
                                    base.energy.packet_bits, integer=True),
            ),
            voronoi=VoronoiParams(
                alpha=_number(voronoi, "alpha", "voronoi", base.voronoi.alpha),
                tol=_number(voronoi, "tol", "voronoi", base.voronoi.tol),
                max_iter=_number(voronoi, "max_iter", "voronoi",
                                 base.voronoi.max_iter, integer=True),
            ),
            aco=AcoParams(
                alpha_exp=_number(aco, "alpha_exp", "aco", base.aco.alpha_exp),
                beta_exp=_number(aco, "beta_exp", "aco", base.aco.beta_exp),
                gamma_norm=_number(aco, "gamma_norm", "aco",
                                   base.aco.gamma_norm),
                lambda_norm=_number(aco, "lambda_norm", "aco",
                                    base.aco.lambda_norm),
                n_ants=_number(aco, "n_ants", "aco", base.aco.n_ants,
                               integer=True),
                n_iter=_number(aco, "n_iter", "aco", base.aco.n_iter,
                               integer=True),
                tau_min=_number(aco, "tau_min", "aco", base.aco.tau_min),
            ),
            cost=LinkCostParams(mu=_number(cost, "mu", "cost", base.cost.mu)),
            monitor=MonitorConfig(
                enabled=monitor.get("enabled", False),
                margin_low=_number(monitor, "margin_low", "monitor",
                                   MonitorConfig.margin_low),
                margin_high=_number(monitor, "margin_high", "monitor",
                                    MonitorConfig.margin_high),
            ),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def from_json(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from exc
    return from_dict(doc)


def validate_runtime(config: ScenarioConfig):
    """Checks that need arithmetic beyond field validation."""
    if config.p > 1.0 or config.p <= 0.0:
        raise ConfigError("derived election probability out of range")
    if not math.isfinite(config.initial_energy):
        raise ConfigError("initial_energy must be finite")
