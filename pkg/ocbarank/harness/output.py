from __future__ import annotations

import json
import logging
import os
import platform
import subprocess
from datetime import UTC, datetime
from pathlib import Path
from typing import Any

from ocbarank import __version__
from ocbarank.core import ProblemInstance
from ocbarank.harness.config import ExperimentConfig
from ocbarank.metrics import MetricSeries
from ocbarank.policies import PolicyConfig
from ocbarank.theory import TheoryReport

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = "_manifest.json"


def series_file_name(instance: ProblemInstance, policy: PolicyConfig) -> str:
    return f"{instance.name}_{policy.kind}_d{policy.delta}.csv"


def manifest_file_name(instance: ProblemInstance) -> str:
    return f"{instance.name}{MANIFEST_SUFFIX}"


def theory_file_name(instance: ProblemInstance, delta: int = 1) -> str:
    if delta == 1:
        return f"{instance.name}_theory.json"
    return f"{instance.name}_theory_d{delta}.json"


def _write_json(path: Path, payload: dict[str, Any]) -> Path:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_series(
    out_dir: Path, instance: ProblemInstance, policy: PolicyConfig, series: MetricSeries
) -> Path:
    path = series.to_csv(out_dir / series_file_name(instance, policy))
    logger.info(f"Saved series: {path}")
    return path


def theory_payload(instance: ProblemInstance, report: TheoryReport, delta: int) -> dict[str, Any]:
    return {"instance": instance.name, "delta": delta, **report.model_dump()}


def write_theory(
    out_dir: Path, instance: ProblemInstance, report: TheoryReport, delta: int
) -> Path:
    payload = theory_payload(instance, report, delta)
    path = _write_json(out_dir / theory_file_name(instance, delta), payload)
    logger.info(f"Saved theory report: {path}")
    return path


def git_describe() -> str | None:
    root = Path(__file__).resolve().parents[2]
    try:
        result = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=root,
            capture_output=True,
            text=True,
            check=False,
        )
    except OSError:
        return None
    if result.returncode != 0:
        return None
    return result.stdout.strip() or None


def write_manifest(
    out_dir: Path,
    config: ExperimentConfig,
    series: dict[str, MetricSeries],
    files: dict[str, str],
    elapsed: dict[str, float] | None = None,
) -> Path:
    """Record what produced the outputs; the only file in a run that is not reproducible."""
    manifest = {
        "config": config.echo(),
        "config_hash": config.config_hash(),
        "master_seed": config.master_seed,
        "seed_derivation": "SeedSequence(master_seed, spawn_key=(replication_index,)) -> PCG64",
        "version": __version__,
        "git_describe": git_describe(),
        "timestamp": datetime.now(UTC).isoformat(),
        "host": {
            "platform": platform.platform(),
            "processor": platform.processor() or platform.machine(),
            "cpu_count": os.cpu_count(),
            "workers": config.workers,
        },
        "series": {
            label: {
                "file": files[label],
                "reps": s.reps,
                "final_t": int(s.t[-1]),
                # Only meaningful for policies that report an exploration probability.
                "explore_steps_mean": s.explore_steps,
                "epsilon_sum_mean": s.epsilon_sum,
                "elapsed_seconds": (elapsed or {}).get(label),
            }
            for label, s in series.items()
        },
    }
    path = _write_json(out_dir / manifest_file_name(config.problem), manifest)
    logger.info(f"Saved manifest: {path}")
    return path


def read_manifests(out_dir: Path) -> list[dict[str, Any]]:
    manifests = []
    for path in sorted(Path(out_dir).glob(f"*{MANIFEST_SUFFIX}")):
        try:
            manifests.append(json.loads(path.read_text(encoding="utf-8")))
        except json.JSONDecodeError:
            logger.warning(f"Could not decode {path}, ignoring it.")
    return manifests
