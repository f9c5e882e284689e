"""Replication loop and the per-policy fan-out over worker processes."""

from __future__ import annotations

import logging
import time
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ocbarank.core import ProblemInstance, SeedSpec, draw_samples, init_state
from ocbarank.errors import StateError
from ocbarank.harness import output
from ocbarank.harness.config import ExperimentConfig
from ocbarank.metrics import (
    MetricSeries,
    ReplicationTrace,
    aggregate,
    reachable_grid,
    record_checkpoint,
)
from ocbarank.policies import PolicyConfig, create_policy
from ocbarank.theory import TheoryReport, theory_report

logger = logging.getLogger(__name__)


def run_replication(
    instance: ProblemInstance,
    policy_cfg: PolicyConfig,
    budget: int,
    n0: int,
    grid: Sequence[int],
    seed: SeedSpec,
) -> ReplicationTrace:
    """One independent run from the initial ``n0`` samples per design until ``budget``.

    A checkpoint is recorded the first time the total reaches each grid value; a step that
    jumps over several grid values records a single checkpoint.
    """
    stream = seed.stream()
    policy = create_policy(policy_cfg)
    sigma = instance.sigma_array
    state = init_state(instance, n0, stream)
    trace = ReplicationTrace()
    pending = 0

    def checkpoint() -> None:
        nonlocal pending
        if pending < len(grid) and state.total >= grid[pending]:
            record_checkpoint(trace, state, instance)
            while pending < len(grid) and state.total >= grid[pending]:
                pending += 1

    checkpoint()
    while state.total < budget:
        state.t += 1
        decision = policy.decide(state, sigma, stream)
        for design, n in enumerate(decision.increments(instance.k)):
            if n:
                state.add(design, draw_samples(instance, design, int(n), stream))
        trace.observe(decision, instance)
        checkpoint()

    if not budget <= state.total <= budget + policy_cfg.delta - 1:
        raise StateError(
            f"replication ended with {state.total} samples, outside "
            f"[{budget}, {budget + policy_cfg.delta - 1}]"
        )
    return trace


def _run_chunk(
    instance: ProblemInstance,
    policy_cfg: PolicyConfig,
    budget: int,
    n0: int,
    grid: tuple[int, ...],
    master_seed: int,
    indices: range,
) -> list[ReplicationTrace]:
    return [
        run_replication(instance, policy_cfg, budget, n0, grid, SeedSpec(master_seed, rep))
        for rep in indices
    ]


def _chunks(replications: int, workers: int) -> list[range]:
    base, rem = divmod(replications, workers)
    out, start = [], 0
    for w in range(workers):
        size = base + (1 if w < rem else 0)
        if size:
            out.append(range(start, start + size))
            start += size
    return out


def run_policy(
    instance: ProblemInstance,
    policy_cfg: PolicyConfig,
    *,
    budget: int,
    n0: int,
    grid: Sequence[int],
    replications: int,
    master_seed: int,
    workers: int = 1,
) -> MetricSeries:
    """Run every replication of one policy and aggregate them in replication-index order.

    Grid values a batch policy steps over are replaced by the total it actually reaches.
    Each replication's stream depends only on ``(master_seed, index)`` and the reduce always
    walks indices in order, so the series is identical for any ``workers``.
    """
    grid = reachable_grid(grid, n0 * instance.k, policy_cfg.delta)
    workers = max(1, min(workers, replications))
    logger.info(
        f"Running {policy_cfg.label} on {instance.name}: {replications} replications, "
        f"budget {budget}, {workers} worker(s)"
    )
    chunks = _chunks(replications, workers)
    args = (instance, policy_cfg, budget, n0, grid, master_seed)
    if workers == 1:
        traces = _run_chunk(*args, chunks[0])
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(_run_chunk, *args, chunk) for chunk in chunks]
            traces = [trace for fut in futs for trace in fut.result()]
    series = aggregate(traces, instance)
    logger.info(
        f"Finished {policy_cfg.label} on {instance.name}: final pfs={series.pfs[-1]:.4g}, "
        f"cr={series.cr[-1]:.4g}"
    )
    return series


@dataclass(slots=True)
class ExperimentResult:
    instance: ProblemInstance
    series: dict[str, MetricSeries] = field(default_factory=dict)
    theory: dict[int, TheoryReport] = field(default_factory=dict)
    # Wall-clock seconds per policy label.
    elapsed: dict[str, float] = field(default_factory=dict)
    files: list[Path] = field(default_factory=list)


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run every configured policy and write CSVs, theory reports and the manifest."""
    instance = config.problem
    grid = config.grid()
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = ExperimentResult(instance=instance)
    logger.info(
        f"Starting experiment on {instance.name}: {len(config.policies)} policies, "
        f"{len(grid)} checkpoints, output {out_dir}"
    )

    for delta in sorted({p.delta for p in config.policies}):
        report = theory_report(instance, delta)
        result.theory[delta] = report
        result.files.append(output.write_theory(out_dir, instance, report, delta))

    csv_names: dict[str, str] = {}
    for policy_cfg in config.policies:
        started = time.perf_counter()
        series = run_policy(
            instance,
            policy_cfg,
            budget=config.budget,
            n0=config.n0,
            grid=grid,
            replications=config.replications,
            master_seed=config.master_seed,
            workers=config.workers,
        )
        result.elapsed[policy_cfg.label] = time.perf_counter() - started
        logger.info(
            f"{policy_cfg.label} took {result.elapsed[policy_cfg.label]:.1f}s "
            f"with {config.workers} worker(s)"
        )
        result.series[policy_cfg.label] = series
        path = output.write_series(out_dir, instance, policy_cfg, series)
        csv_names[policy_cfg.label] = path.name
        result.files.append(path)

    result.files.append(
        output.write_manifest(out_dir, config, result.series, csv_names, result.elapsed)
    )
    logger.info(f"Experiment on {instance.name} finished")
    return result
