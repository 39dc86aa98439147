"""Run manifests: what produced an output file, from which inputs.

Manifests live in sidecar files (``<output>.manifest.json``) referenced from
output headers, so the outputs themselves stay byte-identical across reruns
(timestamps exist only here).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path


def tool_version() -> str:
    from . import __version__

    return __version__


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    command: str
    config: dict
    inputs: dict[str, str]  # path -> sha256
    seed: int | None = None
    version: str = field(default_factory=tool_version)
    created_utc: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds")
    )

    def to_json(self) -> str:
        return json.dumps(
            {
                "command": self.command,
                "config": self.config,
                "inputs": self.inputs,
                "seed": self.seed,
                "tool_version": self.version,
                "created_utc": self.created_utc,
            },
            indent=2,
            sort_keys=True,
        )


def write_manifest(output_path: str | Path, manifest: RunManifest) -> Path:
    """Write the sidecar manifest for ``output_path``; returns its path."""
    sidecar = Path(str(output_path) + ".manifest.json")
    sidecar.write_text(manifest.to_json() + "\n", encoding="utf-8")
    return sidecar
