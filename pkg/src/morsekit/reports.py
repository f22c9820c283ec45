"""Deterministic JSON and CSV report writers."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from . import __version__

INF_TAG = "INF"
TOOLKIT = "morsekit"


def jsonable(obj):
    """Plain JSON data with infinities tagged and numpy scalars unwrapped."""
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj, key=str) if isinstance(obj, (set, frozenset)) else obj
        return [jsonable(v) for v in items]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return INF_TAG if v > 0 else "-" + INF_TAG
        return v
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def canonical(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def config_hash(config: dict) -> str:
    blob = json.dumps(jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def envelope(kind: str, config: dict, result) -> dict:
    return {"toolkit": TOOLKIT, "version": __version__, "kind": kind,
            "config": jsonable(config), "config_hash": config_hash(config), "result": jsonable(result)}


def write_report(outdir, name: str, kind: str, config: dict, result) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / f"{name}.json"
    path.write_text(canonical(envelope(kind, config, result)), encoding="utf-8")
    return path


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([jsonable(v) for v in row])
    return path
