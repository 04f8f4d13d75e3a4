"""Discrete-event simulator for multipath WSN routing with EDF scheduling
and service-ratio congestion control."""

from wsnsim.config import SimConfig, parse_config
from wsnsim.engine import MetricsReport, run_simulation, sweep, sweep_service_ratio
from wsnsim.topology import Topology, build_topology

__all__ = [
    "MetricsReport",
    "SimConfig",
    "Topology",
    "build_topology",
    "parse_config",
    "run_simulation",
    "sweep",
    "sweep_service_ratio",
]

__version__ = "0.1.0"
