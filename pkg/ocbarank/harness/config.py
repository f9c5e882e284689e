"""Experiment configuration: a single JSON document validated by pydantic."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ocbarank.core import MAX_SEED, MIN_N0, ProblemInstance, make_instance
from ocbarank.errors import ConfigError
from ocbarank.harness.instances import builtin_instance
from ocbarank.metrics import DEFAULT_GRID_POINTS, checkpoint_grid
from ocbarank.policies.base import PolicyConfig, PolicyKind

logger = logging.getLogger(__name__)

# Configuration
DEFAULT_OUTPUT_DIR = os.environ.get("OCBA_OUTPUT_DIR", "./data/results")
DEFAULT_WORKERS = int(os.environ.get("OCBA_WORKERS", os.cpu_count() or 1))
DEFAULT_N0 = 5
DEFAULT_REPLICATIONS = 500
DEFAULT_BUDGETS = {"instance1": 20_000, "instance2": 2_000}
# The first checkpoint sits at this many samples per design (or n0, if larger).
GRID_START_PER_DESIGN = 10


def _policies(*specs: tuple[PolicyKind, int]) -> tuple[PolicyConfig, ...]:
    return tuple(PolicyConfig(kind=kind, delta=delta) for kind, delta in specs)


GROUPS: dict[str, tuple[PolicyConfig, ...]] = {
    "ocba-delta": _policies(
        *[
            (kind, delta)
            for delta in (1, 10)
            for kind in (PolicyKind.OCBA, PolicyKind.OCBA1, PolicyKind.OCBA2)
        ]
    ),
    "ocba-vs-um": _policies(
        (PolicyKind.OCBA1, 1),
        (PolicyKind.OCBA2, 1),
        (PolicyKind.OCBA1UM, 1),
        (PolicyKind.OCBA2UM, 1),
    ),
    "um-vs-bandits": _policies(
        (PolicyKind.OCBA1UM, 1),
        (PolicyKind.OCBA2UM, 1),
        (PolicyKind.EPS_GREEDY, 1),
        (PolicyKind.UCB1_NORMAL, 1),
    ),
}


class InstanceSpec(BaseModel):
    """A built-in instance by name, or an inline one when ``mu`` and ``sigma`` are given."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "custom"
    mu: tuple[float, ...] | None = None
    sigma: tuple[float, ...] | None = None

    @model_validator(mode="after")
    def _both_or_neither(self) -> InstanceSpec:
        if (self.mu is None) != (self.sigma is None):
            raise ValueError("inline instances need both mu and sigma")
        return self

    def resolve(self) -> ProblemInstance:
        if self.mu is None:
            return builtin_instance(self.name)
        return make_instance(self.mu, self.sigma, name=self.name)


class CheckpointSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    points: int = Field(default=DEFAULT_GRID_POINTS, ge=2)
    # Total sample count of the first checkpoint; defaults to max(10·k, n0·k).
    start: int | None = Field(default=None, ge=1)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    instance: InstanceSpec
    policies: tuple[PolicyConfig, ...] = Field(min_length=1)
    budget: int = Field(gt=0)
    n0: int = Field(default=DEFAULT_N0, ge=MIN_N0)
    replications: int = Field(default=DEFAULT_REPLICATIONS, ge=1)
    master_seed: int = Field(default=0, ge=0, le=MAX_SEED)
    checkpoints: CheckpointSpec = CheckpointSpec()
    output_dir: Path = Field(default_factory=lambda: Path(DEFAULT_OUTPUT_DIR))
    # Replication worker processes; 1 runs serially. Never affects the outputs.
    workers: int = Field(default=DEFAULT_WORKERS, ge=1)

    @field_validator("instance", mode="before")
    @classmethod
    def _instance_by_name(cls, value: Any) -> Any:
        if isinstance(value, str):
            return {"name": value}
        return value

    @model_validator(mode="after")
    def _budget_covers_init(self) -> ExperimentConfig:
        k = self.problem.k
        if self.budget <= self.n0 * k:
            raise ValueError(
                f"budget {self.budget} must exceed the initial n0·k = {self.n0 * k} samples"
            )
        start = self.checkpoints.start
        if start is not None and not self.n0 * k <= start <= self.budget:
            raise ValueError(f"checkpoint start {start} must lie in [{self.n0 * k}, {self.budget}]")
        return self

    @property
    def problem(self) -> ProblemInstance:
        return self.instance.resolve()

    def grid(self) -> tuple[int, ...]:
        k = self.problem.k
        start = self.checkpoints.start
        if start is None:
            start = max(GRID_START_PER_DESIGN * k, self.n0 * k)
            if start > self.budget:
                start = self.n0 * k
        return checkpoint_grid(self.budget, start, self.checkpoints.points)

    def echo(self) -> dict[str, Any]:
        """The output-determining part of the configuration, as written to the manifest."""
        return self.model_dump(mode="json", exclude={"output_dir", "workers"})

    def config_hash(self) -> str:
        payload = json.dumps(self.echo(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def parse_config(data: dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as err:
        logger.warning(f"Rejected experiment configuration: {err.error_count()} error(s)")
        raise ConfigError(f"invalid experiment configuration: {err}") from err


def load_config_data(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} is not valid JSON: {err}") from err
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(load_config_data(path))


def group_data(group: str, instance: str) -> dict[str, Any]:
    """Config data of a preset comparison group on a built-in instance."""
    if group not in GROUPS:
        raise ConfigError(f"unknown group {group!r}; expected one of {', '.join(sorted(GROUPS))}")
    return {
        "instance": instance,
        "policies": [p.model_dump(mode="json") for p in GROUPS[group]],
        "budget": DEFAULT_BUDGETS.get(instance),
        "n0": DEFAULT_N0,
        "replications": DEFAULT_REPLICATIONS,
    }


def apply_overrides(data: dict[str, Any], **overrides: Any) -> dict[str, Any]:
    """Layer command-line values over config data; ``None`` means "not given".

    ``policy`` replaces the policy list with a single policy; ``delta`` applies to every
    policy in the resulting list.
    """
    merged = dict(data)
    policy = overrides.pop("policy", None)
    delta = overrides.pop("delta", None)
    instance = overrides.pop("instance", None)
    if instance is not None:
        merged["instance"] = instance
        if merged.get("budget") is None and instance in DEFAULT_BUDGETS:
            merged["budget"] = DEFAULT_BUDGETS[instance]
    if policy is not None:
        merged["policies"] = [{"kind": policy}]
    if delta is not None:
        merged["policies"] = [
            {**_as_dict(p), "delta": delta} for p in merged.get("policies", [])
        ]
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    return merged


def _as_dict(policy: Any) -> dict[str, Any]:
    if isinstance(policy, PolicyConfig):
        return policy.model_dump(mode="json")
    if isinstance(policy, str):
        return {"kind": policy}
    return dict(policy)
