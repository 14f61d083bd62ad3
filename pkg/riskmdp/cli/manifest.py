"""Run manifests: what produced an output file, hashed for provenance."""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field, ValidationError
from ulid import ULID

from riskmdp import __version__
from riskmdp.errors import ManifestError
from riskmdp.planner import PlannerConfig

# Fields that differ between otherwise identical runs.
_UNHASHED = {"run_id", "created_at", "input_paths", "outputs"}


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class RunManifest(BaseModel):
    run_id: str = Field(default_factory=lambda: str(ULID()))
    created_at: str = Field(
        default_factory=lambda: datetime.now(tz=timezone.utc).isoformat(timespec="seconds")
    )
    version: str = __version__
    command: str
    parameters: dict[str, Any] = Field(default_factory=dict)
    planner: PlannerConfig | None = None
    seeds: dict[str, int] = Field(default_factory=dict)
    input_paths: dict[str, str] = Field(default_factory=dict)
    input_digests: dict[str, str] = Field(default_factory=dict)
    outputs: list[str] = Field(default_factory=list)

    def add_input(self, name: str, path: str | Path) -> None:
        self.input_paths[name] = str(path)
        self.input_digests[name] = file_digest(path)

    @property
    def hash(self) -> str:
        return manifest_hash(self)


def manifest_hash(manifest: RunManifest) -> str:
    """sha256 of the canonical JSON of the run-defining fields.

    Run id, timestamps and file locations are left out, so repeating a run
    with the same inputs and flags reproduces the hash.
    """
    payload = manifest.model_dump(mode="json", exclude=_UNHASHED)
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def manifest_path(output: str | Path) -> Path:
    output = Path(output)
    return output.with_name(f"{output.stem}.manifest.json")


def write_manifest(manifest: RunManifest, output: str | Path) -> Path:
    """Write ``<output stem>.manifest.json`` next to ``output``."""
    path = manifest_path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    if str(output) not in manifest.outputs:
        manifest.outputs.append(str(output))
    document = manifest.model_dump(mode="json")
    document["manifest_hash"] = manifest.hash
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_manifest(path: str | Path) -> RunManifest:
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    stored = document.pop("manifest_hash", None)
    try:
        manifest = RunManifest.model_validate(document)
    except ValidationError as exc:
        raise ManifestError(f"invalid manifest {path}: {exc}") from exc
    if stored is not None and stored != manifest.hash:
        raise ManifestError(f"manifest {path} hash mismatch: stored {stored}, computed {manifest.hash}")
    return manifest
