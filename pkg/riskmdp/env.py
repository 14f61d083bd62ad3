from __future__ import annotations

import os
from pathlib import Path


def _repo_root() -> Path:
    return Path(__file__).resolve().parent.parent


def _parse_env_line(line: str) -> tuple[str, str] | None:
    stripped = line.strip()
    if not stripped or stripped.startswith("#"):
        return None
    if stripped.startswith("export "):
        stripped = stripped[7:].lstrip()
    key, sep, value = stripped.partition("=")
    key = key.strip()
    if not sep or not key:
        return None
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] and value[0] in {"'", '"'}:
        value = value[1:-1]
    return key, value


def load_env(path: Path | None = None) -> None:
    """Populate ``os.environ`` from a ``.env`` file without overriding.

    Only used for ``RISKMDP_*`` knobs (config path, thread cap); a missing
    file is not an error.
    """
    env_path = path or _repo_root() / ".env"
    try:
        content = env_path.read_text(encoding="utf-8")
    except OSError:
        return
    for line in content.splitlines():
        parsed = _parse_env_line(line)
        if parsed:
            os.environ.setdefault(*parsed)


def thread_cap(default: int | None = None) -> int:
    """Worker cap for fan-out, from ``$RISKMDP_THREADS``."""
    raw = (os.getenv("RISKMDP_THREADS") or "").strip()
    if raw:
        try:
            value = int(raw)
        except ValueError:
            value = 0
        if value >= 1:
            return value
    if default is not None:
        return max(1, default)
    return max(1, min(8, os.cpu_count() or 1))
