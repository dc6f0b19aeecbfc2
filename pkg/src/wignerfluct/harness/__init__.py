"""Monte Carlo harness: configuration, runners, results and the command line."""

from .config import ConfigError, ExperimentConfig, parse_point
from .experiments import (
    RUNNERS,
    entry_samples,
    field_samples,
    run,
    run_decay,
    run_decoupling,
    run_entry_mc,
    run_hs_check,
    run_predict,
    run_qf_clt,
    run_resolvent_field,
    run_schur_field,
)
from .results import SCHEMA_VERSION, ExperimentResult, read_samples_csv, write_samples_csv

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentResult",
    "RUNNERS",
    "SCHEMA_VERSION",
    "entry_samples",
    "field_samples",
    "parse_point",
    "read_samples_csv",
    "run",
    "run_decay",
    "run_decoupling",
    "run_entry_mc",
    "run_hs_check",
    "run_predict",
    "run_qf_clt",
    "run_resolvent_field",
    "run_schur_field",
    "write_samples_csv",
]
