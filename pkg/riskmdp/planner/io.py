from __future__ import annotations

import json
from pathlib import Path

from riskmdp.planner.types import OracleResult, PlanResult
from riskmdp.utils import dump_json


def write_plan(result: PlanResult, path: str | Path, manifest_hash: str | None = None) -> Path:
    """``{"plan": ..., "manifest_hash": ...}`` with floats at 12 significant digits."""
    return dump_json({"plan": result, "manifest_hash": manifest_hash}, path)


def read_plan(path: str | Path) -> PlanResult:
    with Path(path).open("r", encoding="utf-8") as f:
        payload = json.load(f)
    if isinstance(payload, dict) and "plan" in payload:
        payload = payload["plan"]
    return PlanResult.model_validate(payload)


def write_oracle(
    result: OracleResult, path: str | Path, extra: dict | None = None
) -> Path:
    return dump_json({"oracle": result, **(extra or {})}, path)
