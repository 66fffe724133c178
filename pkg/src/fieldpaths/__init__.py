"""Energy-efficient local path reconfiguration for industrial wireless
field networks: protocol library, baselines and discrete-event simulator."""

from .baselines import BaselineKind
from .engine import MetricsLog, Simulation, run_scenario
from .lifetime import EnergyState, Lifetime, RateVector, node_lifetime
from .planner import Plan, brute_force_max_min_lifetime, compute_initial_plan
from .report import run_experiment, sweep_reconfigurations
from .scenario import ScenarioConfig, load_scenario, parse_scenario
from .topology import DataPiece, NetworkGraph, build_grid_topology

__version__ = "0.1.0"

__all__ = [
    "BaselineKind", "DataPiece", "EnergyState", "Lifetime", "MetricsLog",
    "NetworkGraph", "Plan", "RateVector", "ScenarioConfig", "Simulation",
    "brute_force_max_min_lifetime", "build_grid_topology",
    "compute_initial_plan", "load_scenario", "node_lifetime",
    "parse_scenario", "run_experiment", "run_scenario",
    "sweep_reconfigurations",
]
