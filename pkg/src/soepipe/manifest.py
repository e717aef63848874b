"""Run manifest: content-hashed artifact bookkeeping and atomic writes.

Stage outputs go through a temp-file rename so a crashed run never leaves a
half-written artifact, and every artifact is recorded with its sha256 so
reruns can be checked for byte identity.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

__all__ = [
    "sha256_file",
    "atomic_write_text",
    "atomic_write_json",
    "ManifestStore",
]


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def atomic_write_json(path: str | Path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, ensure_ascii=False, indent=2) + "\n")


class ManifestStore:
    """Per-run manifest mapping each stage to hashed inputs/outputs and params."""

    FILENAME = "manifest.json"

    def __init__(self, out_dir: str | Path, tool_version: str):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.path = self.out_dir / self.FILENAME
        if self.path.exists():
            self.data = json.loads(self.path.read_text(encoding="utf-8"))
        else:
            self.data = {"tool_version": tool_version, "stages": {}}

    def _rel(self, path: str | Path) -> str:
        p = Path(path).resolve()
        try:
            return str(p.relative_to(self.out_dir.resolve()))
        except ValueError:
            return str(p)

    def record_stage(
        self,
        stage: str,
        inputs: list[str | Path],
        outputs: list[str | Path],
        params: dict,
        stats: dict | None = None,
    ) -> None:
        self.data["stages"][stage] = {
            "inputs": {self._rel(p): sha256_file(p) for p in inputs},
            "outputs": {self._rel(p): sha256_file(p) for p in outputs},
            "params": params,
            "stats": stats or {},
        }
        atomic_write_json(self.path, self.data)

    def stage(self, name: str) -> dict | None:
        return self.data["stages"].get(name)

    def require_stage(self, name: str) -> dict:
        entry = self.stage(name)
        if entry is None:
            raise FileNotFoundError(f"stage {name!r} has not produced artifacts yet")
        return entry
