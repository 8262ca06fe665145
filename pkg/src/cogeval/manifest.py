"""Run manifests: a sidecar ``<output>.manifest.json`` for every CLI run.

Manifests hold no timestamps or host details, so identical runs produce
byte-identical manifests.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(config) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


@dataclass
class RunManifest:
    command: str
    inputs: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    seed: Optional[int] = None
    version: str = ""
    outputs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "inputs": [{"path": str(p), "sha256": sha256_file(p)} for p in self.inputs],
            "config": self.config,
            "config_hash": config_hash(self.config),
            "seed": self.seed,
            "toolkit_version": self.version,
            "outputs": [{"path": str(p), "sha256": sha256_file(p)} for p in self.outputs],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write(self, primary_output) -> str:
        path = f"{primary_output}.manifest.json"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())
        return path
