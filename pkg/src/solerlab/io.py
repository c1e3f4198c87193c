"""CSV and JSON writers with round-trip precision and reproducibility sidecars."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import __version__


def fmt(x) -> str:
    """17 significant digits for floats; integers and strings pass through."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.16e}"
    return str(x)


def write_csv(path: Path, header: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _jsonable(obj.real), "im": _jsonable(obj.imag)}
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def sidecar(path: Path, command: str, config: dict, seed: int | None, extra: dict | None = None) -> Path:
    """Write ``<path>.json`` next to an output file with the config, seed and library version."""
    path = Path(path)
    rec = {"command": command, "config": config, "seed": seed, "version": __version__}
    if extra:
        rec.update(extra)
    return write_json(path.with_suffix(path.suffix + ".json"), rec)


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with Path(path).open() as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(x) for x in r] for r in rows[1:]])


def read_config(path: Path) -> dict:
    """Plain ``key = value`` lines; ``#`` starts a comment; keys use flag names with - or _."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            from .errors import ConfigurationError

            raise ConfigurationError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out
