"""Per-replication traces and their cross-replication estimates of PFS, EOC and CR."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path

import numpy as np
import pandas as pd

from ocbarank.core import AllocationState, ProblemInstance, estimated_best
from ocbarank.errors import TraceError
from ocbarank.policies.base import Branch, StepDecision

CSV_FLOAT_FORMAT = "%.17g"
BASE_COLUMNS = ("t", "pfs", "eoc", "cr", "pfs_rate", "eoc_rate", "cr_per_t", "cr_per_logt")
MIN_FIT_POINTS = 3
DEFAULT_GRID_POINTS = 50


class MetricField(StrEnum):
    PFS = "pfs"
    EOC = "eoc"
    CR = "cr"
    # log PFS against log t: the polynomial decay of the regret-optimal variants.
    PFS_LOG = "pfs_log"


@dataclass(slots=True)
class ReplicationTrace:
    checkpoints: list[int] = field(default_factory=list)
    estimated_best: list[int] = field(default_factory=list)
    counts: list[np.ndarray] = field(default_factory=list)
    regret_sum: list[float] = field(default_factory=list)
    # Running totals over every step observed so far.
    regret: float = 0.0
    steps: int = 0
    explore_steps: int = 0
    epsilon_sum: float = 0.0

    def observe(self, decision: StepDecision, instance: ProblemInstance) -> None:
        increments = decision.increments(instance.k)
        self.regret += float(np.dot(instance.gaps, increments))
        self.steps += 1
        if decision.epsilon is not None:
            self.epsilon_sum += decision.epsilon
            if decision.branch is not Branch.EXPLOIT:
                self.explore_steps += 1


def record_checkpoint(
    trace: ReplicationTrace, state: AllocationState, instance: ProblemInstance
) -> ReplicationTrace:
    if state.k != instance.k:
        raise TraceError(f"state has {state.k} designs, instance has {instance.k}")
    total = state.total
    if trace.checkpoints and total <= trace.checkpoints[-1]:
        raise TraceError(
            f"checkpoint at total {total} does not follow previous checkpoint "
            f"{trace.checkpoints[-1]}"
        )
    trace.checkpoints.append(total)
    trace.estimated_best.append(estimated_best(state))
    trace.counts.append(state.counts.copy())
    trace.regret_sum.append(trace.regret)
    return trace


@dataclass(slots=True)
class MetricSeries:
    t: np.ndarray
    pfs: np.ndarray
    eoc: np.ndarray
    cr: np.ndarray
    alloc_mean: np.ndarray
    reps: int
    explore_steps: float = 0.0
    epsilon_sum: float = 0.0

    @property
    def k(self) -> int:
        return int(self.alloc_mean.shape[1])

    @property
    def pfs_rate(self) -> np.ndarray:
        return _neg_log_rate(self.pfs, self.t)

    @property
    def eoc_rate(self) -> np.ndarray:
        return _neg_log_rate(self.eoc, self.t)

    @property
    def cr_per_t(self) -> np.ndarray:
        return self.cr / self.t

    @property
    def cr_per_logt(self) -> np.ndarray:
        return self.cr / np.log(self.t)

    def to_frame(self) -> pd.DataFrame:
        columns = (
            self.t.astype(np.int64),
            self.pfs,
            self.eoc,
            self.cr,
            self.pfs_rate,
            self.eoc_rate,
            self.cr_per_t,
            self.cr_per_logt,
        )
        frame = pd.DataFrame(dict(zip(BASE_COLUMNS, columns, strict=True)))
        for i in range(self.k):
            frame[f"alloc_mean_{i + 1}"] = self.alloc_mean[:, i]
        return frame

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        # Missing transforms (pfs or eoc exactly 0) become empty cells.
        self.to_frame().to_csv(
            path, index=False, float_format=CSV_FLOAT_FORMAT, na_rep="", lineterminator="\n"
        )
        return path


def _neg_log_rate(values: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.full(values.shape, np.nan)
    positive = values > 0
    out[positive] = -np.log(values[positive]) / t[positive]
    return out


class MetricAccumulator:
    """Partial sums over replications; ``merge`` is commutative and associative."""

    def __init__(self, instance: ProblemInstance, grid: Sequence[int]) -> None:
        self.instance = instance
        self.grid = tuple(int(x) for x in grid)
        m, k = len(self.grid), instance.k
        self.reps = 0
        self.wrong = np.zeros(m, dtype=np.int64)
        self.eoc_sum = np.zeros(m)
        self.cr_sum = np.zeros(m)
        self.alloc_sum = np.zeros((m, k))
        self.explore_steps = 0
        self.epsilon_sum = 0.0

    def add(self, trace: ReplicationTrace) -> None:
        if tuple(trace.checkpoints) != self.grid:
            raise TraceError("replication traces do not share one checkpoint grid")
        chosen = np.asarray(trace.estimated_best, dtype=int)
        t = np.asarray(self.grid, dtype=float)
        self.reps += 1
        self.wrong += chosen != self.instance.best
        self.eoc_sum += self.instance.gaps[chosen]
        self.cr_sum += np.asarray(trace.regret_sum)
        self.alloc_sum += np.vstack(trace.counts) / t[:, None]
        self.explore_steps += trace.explore_steps
        self.epsilon_sum += trace.epsilon_sum

    def merge(self, other: MetricAccumulator) -> MetricAccumulator:
        if other.grid != self.grid or other.instance != self.instance:
            raise TraceError("cannot merge accumulators over different grids or instances")
        merged = MetricAccumulator(self.instance, self.grid)
        merged.reps = self.reps + other.reps
        merged.wrong = self.wrong + other.wrong
        merged.eoc_sum = self.eoc_sum + other.eoc_sum
        merged.cr_sum = self.cr_sum + other.cr_sum
        merged.alloc_sum = self.alloc_sum + other.alloc_sum
        merged.explore_steps = self.explore_steps + other.explore_steps
        merged.epsilon_sum = self.epsilon_sum + other.epsilon_sum
        return merged

    def finalize(self) -> MetricSeries:
        if self.reps == 0:
            raise TraceError("no replications to aggregate")
        n = self.reps
        return MetricSeries(
            t=np.asarray(self.grid, dtype=np.int64),
            pfs=self.wrong / n,
            eoc=self.eoc_sum / n,
            cr=self.cr_sum / n,
            alloc_mean=self.alloc_sum / n,
            reps=n,
            explore_steps=self.explore_steps / n,
            epsilon_sum=self.epsilon_sum / n,
        )


def aggregate(traces: Iterable[ReplicationTrace], instance: ProblemInstance) -> MetricSeries:
    traces = list(traces)
    if not traces:
        raise TraceError("no replications to aggregate")
    acc = MetricAccumulator(instance, traces[0].checkpoints)
    for trace in traces:
        acc.add(trace)
    return acc.finalize()


def _fit_axes(series: MetricSeries, field: MetricField) -> tuple[np.ndarray, np.ndarray]:
    t = series.t.astype(float)
    with np.errstate(divide="ignore"):
        match field:
            case MetricField.PFS:
                return t, np.log(series.pfs)
            case MetricField.EOC:
                return t, np.log(series.eoc)
            case MetricField.CR:
                return np.log(t), series.cr.astype(float)
            case MetricField.PFS_LOG:
                return np.log(t), np.log(series.pfs)
    raise ValueError(f"unknown metric field {field!r}")


def slope_fit(series: MetricSeries, field: MetricField | str, window=None) -> float:
    """Least-squares slope over the checkpoints selected by ``window``.

    ``window`` is anything that indexes the checkpoint axis (slice, index array, boolean
    mask); ``None`` means every checkpoint. Points with non-finite values are dropped.
    """
    x, y = _fit_axes(series, MetricField(field))
    idx = np.arange(series.t.size)
    if window is not None:
        idx = idx[window]
    idx = idx[np.isfinite(y[idx])]
    if idx.size < MIN_FIT_POINTS:
        raise TraceError(
            f"slope fit of {field} needs {MIN_FIT_POINTS} finite points, got {idx.size}"
        )
    slope, _ = np.polyfit(x[idx], y[idx], 1)
    return float(slope)


def fit_window(series: MetricSeries, field: MetricField | str, lo: float, hi: float) -> slice:
    """Checkpoint range from the first to the last checkpoint whose raw metric value lies in
    ``[lo, hi]``."""
    values = getattr(series, MetricField(field).value.removesuffix("_log"))
    inside = np.flatnonzero((values >= lo) & (values <= hi))
    if inside.size == 0:
        raise TraceError(f"no checkpoint has {field} within [{lo}, {hi}]")
    return slice(int(inside[0]), int(inside[-1]) + 1)


def alloc_ratio(series: MetricSeries, i: int, j: int) -> np.ndarray:
    return series.alloc_mean[:, i] / series.alloc_mean[:, j]


def checkpoint_grid(budget: int, start: int, points: int = DEFAULT_GRID_POINTS) -> tuple[int, ...]:
    """Geometrically spaced totals from ``start`` to ``budget``, rounded and de-duplicated."""
    if start < 1 or budget < start:
        raise TraceError(f"invalid checkpoint range [{start}, {budget}]")
    if points < 2 or budget == start:
        return tuple(sorted({start, budget}))
    raw = np.rint(np.geomspace(start, budget, points)).astype(np.int64)
    grid = np.unique(np.clip(raw, start, budget))
    return tuple(int(x) for x in grid)


def reachable_grid(grid: Sequence[int], initial: int, delta: int) -> tuple[int, ...]:
    """Move every grid value up to the first total a run visits.

    Totals start at ``initial`` and grow by exactly ``delta`` per step.
    """
    if delta < 1:
        raise TraceError(f"delta must be >= 1, got {delta}")
    steps = [max(0, -(-(int(g) - initial) // delta)) for g in grid]
    return tuple(sorted({initial + s * delta for s in steps}))
