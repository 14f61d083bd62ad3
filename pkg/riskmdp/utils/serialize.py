from __future__ import annotations

import json
import logging
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 12


def round_floats(obj: Any, digits: int = SIGNIFICANT_DIGITS) -> Any:
    """Round every float in a JSON-like tree to ``digits`` significant digits.

    Non-finite floats become ``None``.
    """
    if isinstance(obj, BaseModel):
        obj = obj.model_dump(mode="json")
    if isinstance(obj, dict):
        return {key: round_floats(value, digits) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(value, digits) for value in obj]
    if isinstance(obj, np.ndarray):
        return round_floats(obj.tolist(), digits)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            return None
        return float(format(value, f".{digits}g"))
    return obj


def dumps(obj: Any, digits: int | None = SIGNIFICANT_DIGITS) -> str:
    data = round_floats(obj, digits) if digits else _plain(obj)
    return json.dumps(data, ensure_ascii=False, indent=2) + "\n"


def _plain(obj: Any) -> Any:
    if isinstance(obj, BaseModel):
        return obj.model_dump(mode="json")
    return obj


def dump_json(obj: Any, path: str | Path, digits: int | None = SIGNIFICANT_DIGITS) -> Path:
    """Write ``obj`` as indented JSON; ``digits=None`` keeps full float precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj, digits), encoding="utf-8")
    return path


def save_result(
    result: Any, output_dir: str | Path, name: str, overwrite: bool = False
) -> Path:
    """Persist a result as ``<output_dir>/<name>.json``.

    An existing file is kept unless ``overwrite`` is set; the new result then
    goes to a timestamped sibling.
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    base_path = output_dir / f"{name}.json"
    target_path = base_path
    if base_path.exists() and not overwrite:
        timestamp = datetime.now(tz=timezone.utc).strftime("%Y%m%d%H%M%S")
        target_path = output_dir / f"{name}_{timestamp}.json"
        logger.warning(
            "File %s exists, writing to %s instead. Use --overwrite to override.",
            base_path,
            target_path,
        )
    return dump_json(result, target_path)
