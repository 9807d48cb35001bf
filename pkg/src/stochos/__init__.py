"""Stochastic opportunistic maintenance scheduling for offshore wind farms."""
from __future__ import annotations

from .data import ConfigError, DataError, Dataset, FleetConfig, OperationalParams, load_config, load_dataset
from .benchmarks import KINDS, SolverOptions, Strategy
from .rolling import HorizonExhausted, run_experiment

__all__ = [
    "ConfigError", "DataError", "Dataset", "FleetConfig", "OperationalParams", "load_config", "load_dataset",
    "KINDS", "SolverOptions", "Strategy", "HorizonExhausted", "run_experiment",
]
__version__ = "0.1.0"
