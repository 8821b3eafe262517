"""Desk-scale victim model: learning switch plus O-DU/O-RU nodes."""

from .config import ConfigError, NodeConfig, PlanePolicy, Topology, TrafficProfile, load_topology, parse_topology
from .sim import NodeStatus, Severity, SimOutcome, Simulation, Verdict, run_scenario
from .switch import SwitchModel

__all__ = [
    "ConfigError", "NodeConfig", "PlanePolicy", "Topology", "TrafficProfile", "load_topology",
    "parse_topology", "NodeStatus", "Severity", "SimOutcome", "Simulation", "Verdict",
    "run_scenario", "SwitchModel",
]
