"""Read-only JSON views of a results directory and of the theory layer."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

import pandas as pd
from fastapi import FastAPI, HTTPException, Query
from pydantic import BaseModel

from ocbarank.errors import InstanceError
from ocbarank.harness.instances import builtin_instance, list_instances
from ocbarank.harness.output import read_manifests, theory_payload
from ocbarank.theory import theory_report

logger = logging.getLogger(__name__)


class InstanceInfo(BaseModel):
    name: str
    mu: list[float]
    sigma: list[float]
    # 1-based, as in the CLI listing.
    best: int


class ResultFile(BaseModel):
    file: str
    manifest: dict[str, Any] | None = None


def _manifest_entries(out_dir: Path) -> dict[str, dict[str, Any]]:
    entries: dict[str, dict[str, Any]] = {}
    for manifest in read_manifests(out_dir):
        for label, entry in manifest.get("series", {}).items():
            entries[entry["file"]] = {
                "label": label,
                "config_hash": manifest.get("config_hash"),
                "master_seed": manifest.get("master_seed"),
                "timestamp": manifest.get("timestamp"),
                **entry,
            }
    return entries


def create_app(out_dir: str | Path) -> FastAPI:
    out_dir = Path(out_dir)
    app = FastAPI(title="ocbarank results", version="0.1.0")

    @app.get("/instances", response_model=list[InstanceInfo])
    def instances() -> list[InstanceInfo]:
        out = []
        for name in list_instances():
            inst = builtin_instance(name)
            out.append(
                InstanceInfo(
                    name=name, mu=list(inst.mu), sigma=list(inst.sigma), best=inst.best + 1
                )
            )
        return out

    @app.get("/theory/{name}")
    def theory(name: str, delta: int = Query(default=1, ge=1)) -> dict[str, Any]:
        try:
            instance = builtin_instance(name)
        except InstanceError as e:
            raise HTTPException(status_code=404, detail=str(e)) from e
        return theory_payload(instance, theory_report(instance, delta), delta)

    @app.get("/results", response_model=list[ResultFile])
    def results() -> list[ResultFile]:
        if not out_dir.is_dir():
            return []
        entries = _manifest_entries(out_dir)
        return [
            ResultFile(file=path.name, manifest=entries.get(path.name))
            for path in sorted(out_dir.glob("*.csv"))
        ]

    @app.get("/results/{file_name}")
    def result_rows(file_name: str) -> list[dict[str, Any]]:
        path = out_dir / file_name
        # Only plain CSV names inside the results directory.
        if Path(file_name).name != file_name or path.suffix != ".csv" or not path.is_file():
            raise HTTPException(status_code=404, detail=f"no result file {file_name!r}")
        frame = pd.read_csv(path)
        # Empty cells (missing transforms) become null.
        frame = frame.astype(object).where(frame.notna(), None)
        return frame.to_dict(orient="records")

    logger.debug(f"Results API bound to {out_dir}")
    return app
