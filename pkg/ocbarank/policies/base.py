from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ocbarank.core import AllocationState

GAP_FLOOR = 1e-12


class PolicyKind(StrEnum):
    OCBA = "ocba"
    OCBA1 = "ocba1"
    OCBA2 = "ocba2"
    OCBA1UM = "ocba1-um"
    OCBA2UM = "ocba2-um"
    EPS_GREEDY = "eps-greedy"
    UCB1_NORMAL = "ucb1-normal"


# Kinds that commit exactly one sample per decision.
SINGLE_SAMPLE_KINDS = frozenset(
    {PolicyKind.OCBA1UM, PolicyKind.OCBA2UM, PolicyKind.EPS_GREEDY, PolicyKind.UCB1_NORMAL}
)


class Branch(StrEnum):
    DEFICIT = "deficit"
    BALANCE = "balance"
    RATE = "rate"
    EXPLOIT = "exploit"
    EXPLORE = "explore"
    UNIFORM = "uniform"
    FORCED = "forced"
    INDEX = "index"
    BATCH = "batch"


class PolicyConfig(BaseModel):
    """Configuration for one sampling policy."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: PolicyKind
    delta: int = Field(default=1, ge=1)
    gap_floor: float = Field(default=GAP_FLOOR, gt=0)

    @model_validator(mode="after")
    def _single_sample_kinds(self) -> PolicyConfig:
        if self.kind in SINGLE_SAMPLE_KINDS and self.delta != 1:
            raise ValueError(f"policy {self.kind} samples one design at a time; delta must be 1")
        return self

    @property
    def label(self) -> str:
        return f"{self.kind}_d{self.delta}"


@dataclass(frozen=True, slots=True)
class StepDecision:
    design: int
    branch: Branch
    batch: int
    # Exploration probability used for the step, for policies that have one.
    epsilon: float | None = None
    # Per-design increments for batch policies; None means all of ``batch`` goes to ``design``.
    allocation: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.design < 0 or self.batch < 1:
            raise ValueError(f"invalid decision: design={self.design}, batch={self.batch}")

    def increments(self, k: int) -> np.ndarray:
        if self.allocation is not None:
            return np.asarray(self.allocation, dtype=np.int64)
        out = np.zeros(k, dtype=np.int64)
        out[self.design] = self.batch
        return out


class Policy:
    name: str
    # Uniform variates drawn from the stream before every decision.
    draws_per_step: int = 0

    def __init__(self, config: PolicyConfig) -> None:
        self.config = config

    def decide(  # pragma: no cover
        self, state: AllocationState, sigma: np.ndarray, stream: np.random.Generator
    ) -> StepDecision:
        raise NotImplementedError
