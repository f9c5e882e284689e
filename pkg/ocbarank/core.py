"""Problem instances, seeded Gaussian sampling and the allocation state every policy consumes.

Random streams
--------------
Every replication owns one ``numpy.random.Generator`` backed by PCG64 and seeded with
``SeedSequence(master_seed, spawn_key=(replication_index,))``. Gaussian variates come from
``Generator.normal`` (ziggurat), one call per design visit, so the call order is:

1. ``init_state``: designs in index order, ``n0`` variates each (one vectorised call per design).
2. every policy step: the policy's uniform draws first (see ``ocbarank.policies``), then the
   ``batch`` variates of the chosen design(s) in design-index order.

Streams are reproducible for a given numpy release on every platform numpy supports.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ocbarank.errors import ConfigError, InstanceError, StateError

# Gaps between the best mean and any other mean below this are treated as ties.
MIN_GAP = 1e-12
MIN_N0 = 2
MAX_SEED = 2**64 - 1


@dataclass(frozen=True, slots=True)
class ProblemInstance:
    """Known-variance Gaussian designs; ``best`` is derived from ``mu``."""

    mu: tuple[float, ...]
    sigma: tuple[float, ...]
    name: str = "custom"
    best: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "best", int(np.argmax(self.mu)))

    @property
    def k(self) -> int:
        return len(self.mu)

    @property
    def mu_array(self) -> np.ndarray:
        return np.asarray(self.mu, dtype=float)

    @property
    def sigma_array(self) -> np.ndarray:
        return np.asarray(self.sigma, dtype=float)

    @property
    def gaps(self) -> np.ndarray:
        """``mu[best] - mu[i]`` for every design (zero at ``best``)."""
        mu = self.mu_array
        return mu[self.best] - mu

    def others(self) -> np.ndarray:
        return np.array([i for i in range(self.k) if i != self.best], dtype=int)


def make_instance(mu, sigma, *, name: str = "custom") -> ProblemInstance:
    mu_arr = np.asarray(mu, dtype=float).ravel()
    sigma_arr = np.asarray(sigma, dtype=float).ravel()
    if mu_arr.shape != sigma_arr.shape:
        raise InstanceError(
            f"mu and sigma must have equal lengths, got {mu_arr.size} and {sigma_arr.size}"
        )
    if mu_arr.size < 2:
        raise InstanceError(f"at least 2 designs are required, got {mu_arr.size}")
    if not (np.all(np.isfinite(mu_arr)) and np.all(np.isfinite(sigma_arr))):
        raise InstanceError("mu and sigma must be finite")
    if np.any(sigma_arr <= 0):
        raise InstanceError(f"sigma must be strictly positive, got {sigma_arr.tolist()}")

    best = int(np.argmax(mu_arr))
    runner_up = np.max(np.delete(mu_arr, best))
    if mu_arr[best] - runner_up < MIN_GAP:
        raise InstanceError(f"the maximum mean {mu_arr[best]} is tied; a unique best is required")

    return ProblemInstance(
        mu=tuple(float(x) for x in mu_arr),
        sigma=tuple(float(x) for x in sigma_arr),
        name=name,
    )


@dataclass(frozen=True, slots=True)
class SeedSpec:
    master_seed: int
    replication_index: int

    def __post_init__(self) -> None:
        if not 0 <= self.master_seed <= MAX_SEED:
            raise ConfigError(
                f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}"
            )
        if self.replication_index < 0:
            raise ConfigError(f"replication_index must be >= 0, got {self.replication_index}")

    def stream(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.replication_index,))
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(slots=True)
class AllocationState:
    """Per-design counts and running sums; sample means are derived, never stored."""

    counts: np.ndarray
    sums: np.ndarray
    # Only the UCB1-Normal baseline reads the sums of squares.
    sumsq: np.ndarray
    t: int = 0

    @classmethod
    def empty(cls, k: int) -> AllocationState:
        return cls(
            counts=np.zeros(k, dtype=np.int64),
            sums=np.zeros(k, dtype=float),
            sumsq=np.zeros(k, dtype=float),
        )

    @property
    def k(self) -> int:
        return int(self.counts.size)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def alloc(self) -> np.ndarray:
        return self.counts / self.total

    def means(self) -> np.ndarray:
        if np.any(self.counts < 1):
            missing = np.flatnonzero(self.counts < 1).tolist()
            raise StateError(f"sample mean undefined for unsampled designs {missing}")
        return self.sums / self.counts

    def mean(self, design: int) -> float:
        self._check_design(design)
        if self.counts[design] < 1:
            raise StateError(f"sample mean undefined for unsampled design {design}")
        return float(self.sums[design] / self.counts[design])

    def add(self, design: int, values: np.ndarray) -> None:
        self._check_design(design)
        values = np.atleast_1d(np.asarray(values, dtype=float))
        self.counts[design] += values.size
        self.sums[design] += float(values.sum())
        self.sumsq[design] += float(np.dot(values, values))

    def copy(self) -> AllocationState:
        return AllocationState(
            counts=self.counts.copy(), sums=self.sums.copy(), sumsq=self.sumsq.copy(), t=self.t
        )

    def _check_design(self, design: int) -> None:
        if not 0 <= design < self.k:
            raise StateError(f"design {design} out of range [0, {self.k})")


def draw_sample(instance: ProblemInstance, design: int, stream: np.random.Generator) -> float:
    return float(draw_samples(instance, design, 1, stream)[0])


def draw_samples(
    instance: ProblemInstance, design: int, n: int, stream: np.random.Generator
) -> np.ndarray:
    if not 0 <= design < instance.k:
        raise StateError(f"design {design} out of range [0, {instance.k})")
    return stream.normal(instance.mu[design], instance.sigma[design], size=n)


def init_state(
    instance: ProblemInstance, n0: int, stream: np.random.Generator
) -> AllocationState:
    if n0 < MIN_N0:
        raise StateError(f"n0 must be >= {MIN_N0}, got {n0}")
    state = AllocationState.empty(instance.k)
    for design in range(instance.k):
        state.add(design, draw_samples(instance, design, n0, stream))
    return state


def estimated_best(state: AllocationState) -> int:
    # np.argmax returns the lowest index among ties.
    return int(np.argmax(state.means()))
