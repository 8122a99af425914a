"""Round-based wireless sensor network simulator.

Implements a multi-level optimized clustering protocol (weighted-Voronoi
cluster boundaries, energy-aware head election, ant-colony inter-cluster
routing, cost-driven intra-cluster routing and a deep-belief-network event
monitor) alongside two baselines for lifetime, throughput and energy
comparisons.
"""

__version__ = "0.1.0"

from .config import ConfigError, MonitorConfig, ScenarioConfig, from_dict, from_json
from .engine import (SetupError, SimulationState, init_scenario,
                     is_network_dead, run_round, run_simulation)

__all__ = [
    "ConfigError", "MonitorConfig", "ScenarioConfig", "from_dict", "from_json",
    "SetupError", "SimulationState", "init_scenario", "is_network_dead",
    "run_round", "run_simulation", "__version__",
]
