"""Experiment harness: configs, seeded streams, drivers and the CLI."""
from .config import ConfigError, ExperimentConfig, load_config
from .experiments import (
    Report,
    emit_bound_table,
    run,
    run_bestarm,
    run_coverage,
    run_stopping,
)
from .rng import rng_stream

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "Report",
    "emit_bound_table",
    "run",
    "run_bestarm",
    "run_coverage",
    "run_stopping",
    "rng_stream",
]
