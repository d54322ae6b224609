"""Discrete-event simulation of cooperative and verify-everything beaconing."""

from .config import DEFAULT_VERIFY_COST, Protocol, ScenarioConfig
from .engine import Simulation, derive_seed, run, sweep, transmission_delay
from .metrics import CSV_HEADER, MetricsReport, atomic_write, render_csv
from .mobility import GridMobility

__all__ = [
    "CSV_HEADER",
    "DEFAULT_VERIFY_COST",
    "GridMobility",
    "MetricsReport",
    "Protocol",
    "ScenarioConfig",
    "Simulation",
    "atomic_write",
    "derive_seed",
    "render_csv",
    "run",
    "sweep",
    "transmission_delay",
]
