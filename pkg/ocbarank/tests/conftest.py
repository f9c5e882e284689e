from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from ocbarank.core import AllocationState, ProblemInstance, make_instance

RESOURCES_DIR = Path(__file__).parent / "resources"


def load_resource(name: str) -> dict:
    return json.loads((RESOURCES_DIR / f"{name}.json").read_text(encoding="utf-8"))


def make_state(counts, means, *, t: int = 1, variance: float = 1.0) -> AllocationState:
    """State whose sample means are exactly ``means``; sums of squares match ``variance``."""
    counts = np.asarray(counts, dtype=np.int64)
    means = np.asarray(means, dtype=float)
    sums = means * counts
    sumsq = (counts - 1) * variance + counts * means**2
    return AllocationState(counts=counts, sums=sums, sumsq=sumsq, t=t)


@pytest.fixture
def instance1_data() -> dict:
    return load_resource("instance1")


@pytest.fixture
def instance2_data() -> dict:
    return load_resource("instance2")


@pytest.fixture(params=["instance1", "instance2"])
def builtin_data(request) -> dict:
    return load_resource(request.param)


@pytest.fixture
def two_designs() -> ProblemInstance:
    return make_instance([0.0, 1.0], [1.0, 1.0], name="two")
