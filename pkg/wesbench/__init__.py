"""Benchmark of the weighted empirical stretching loss against standard regression losses."""
from __future__ import annotations

from .const import VERSION
from .config import ExperimentConfig, load_config
from .runner import ResultSet, aggregate, emit_reports, run_experiment

__version__ = VERSION
__all__ = ["ExperimentConfig", "ResultSet", "aggregate", "emit_reports", "load_config", "run_experiment"]
