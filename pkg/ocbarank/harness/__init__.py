from __future__ import annotations

from .config import GROUPS, ExperimentConfig, load_config, parse_config
from .instances import builtin_instance, list_instances
from .runner import ExperimentResult, run_experiment, run_policy, run_replication

__all__ = [
    "GROUPS",
    "ExperimentConfig",
    "ExperimentResult",
    "builtin_instance",
    "list_instances",
    "load_config",
    "parse_config",
    "run_experiment",
    "run_policy",
    "run_replication",
]
