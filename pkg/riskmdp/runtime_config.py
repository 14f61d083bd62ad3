from __future__ import annotations

import os
from pathlib import Path
from typing import Any

import yaml

_RUNTIME_CONFIG_CACHE: dict[str, Any] | None = None


def _repo_root() -> Path:
    # `riskmdp/` lives under the project root in this repo.
    return Path(__file__).resolve().parent.parent


def _as_float(value: Any) -> float | None:
    if value is None or isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value.strip())
        except ValueError:
            return None
    return None


def _as_int(value: Any) -> int | None:
    number = _as_float(value)
    if number is None:
        return None
    return int(number)


def load_runtime_config() -> dict[str, Any]:
    """Load runtime defaults from YAML, cached for process lifetime.

    Resolution order:
    1) `$RISKMDP_CONFIG` (if set)
    2) `<repo_root>/config.yaml` (if exists)
    """
    global _RUNTIME_CONFIG_CACHE  # noqa: PLW0603
    if _RUNTIME_CONFIG_CACHE is not None:
        return _RUNTIME_CONFIG_CACHE

    env_path = (os.getenv("RISKMDP_CONFIG") or "").strip()
    candidates: list[Path] = []
    if env_path:
        candidates.append(Path(env_path))
    candidates.append(_repo_root() / "config.yaml")

    for path in candidates:
        if not path.is_file():
            continue
        try:
            with path.open("r", encoding="utf-8") as f:
                loaded = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError):
            continue
        if isinstance(loaded, dict):
            _RUNTIME_CONFIG_CACHE = loaded
            return _RUNTIME_CONFIG_CACHE

    _RUNTIME_CONFIG_CACHE = {}
    return _RUNTIME_CONFIG_CACHE


def reset_runtime_config() -> None:
    global _RUNTIME_CONFIG_CACHE  # noqa: PLW0603
    _RUNTIME_CONFIG_CACHE = None


def get_section(name: str) -> dict[str, Any]:
    section = load_runtime_config().get(name)
    return dict(section) if isinstance(section, dict) else {}


def get_float(section: str, key: str, default: float) -> float:
    value = _as_float(get_section(section).get(key))
    return default if value is None else value


def get_int(section: str, key: str, default: int) -> int:
    value = _as_int(get_section(section).get(key))
    return default if value is None else value


def default_layout_seed() -> int:
    return get_int("grid", "layout_seed", 20230517)


def default_budget(size: int) -> float | None:
    """Budget β for the square grid family of side ``size``, if configured."""
    budgets = get_section("grid").get("budgets") or {}
    if not isinstance(budgets, dict):
        return None
    return _as_float(budgets.get(size, budgets.get(str(size))))


def default_uncertain(size: int) -> int:
    counts = get_section("grid").get("uncertain_obstacles") or {}
    if not isinstance(counts, dict):
        return 0
    return _as_int(counts.get(size, counts.get(str(size)))) or 0
