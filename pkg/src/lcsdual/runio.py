"""Deterministic artifact writing.

CSV cells carry 17 significant digits so floats round-trip exactly; manifests
are canonical JSON with no volatile fields, so a rerun of an identical config
reproduces every byte.
"""

from __future__ import annotations

import json
from pathlib import Path


def fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(path: Path, header: list[str], rows) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:] if line]


def write_json(path: Path, payload: dict) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_manifest(outdir: Path, command: str, config_values: dict, config_hash: str,
                   workers: int, artifacts: list[str], extra: dict | None = None,
                   soft_failures: dict | None = None) -> Path:
    payload = {
        "command": command,
        "config": {k: _jsonable(v) for k, v in sorted(config_values.items())},
        "config_hash": config_hash,
        "workers": workers,
        "artifacts": sorted(artifacts),
        "soft_failures": soft_failures or {},
        "format_version": 1,
    }
    if extra:
        payload["extra"] = {k: _jsonable(v) for k, v in sorted(extra.items())}
    path = Path(outdir) / "manifest.json"
    write_json(path, payload)
    return path


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    if isinstance(v, list):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if hasattr(v, "tolist"):
        return v.tolist()
    return v
