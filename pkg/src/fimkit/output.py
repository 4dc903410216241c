"""Byte-stable serialization of ensembles, tables and reports."""

from __future__ import annotations

import io
import json
import math

import numpy as np

from ._version import __version__
from .paths import Ensemble

SCHEMA_VERSION = "1.0"


def format_float(x) -> str:
    """17 significant digits, enough to round-trip any double."""
    return format(float(x), ".17g")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def csv_bytes(header, rows) -> bytes:
    buf = io.StringIO(newline="")
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(_cell(v) for v in r) + "\n")
    return buf.getvalue().encode("utf-8")


def jsonable(obj):
    """Plain JSON types; non-finite floats become the strings "inf", "-inf", "nan"."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def json_bytes(obj) -> bytes:
    text = json.dumps(jsonable(obj), indent=2, sort_keys=True, allow_nan=False)
    return (text + "\n").encode("utf-8")


def ensemble_csv(e: Ensemble) -> bytes:
    t = e.grid.times
    rows = ((i, t[k], e.paths[i, k]) for i in range(len(e)) for k in range(t.size))
    return csv_bytes(["path_id", "t", "x"], rows)


def ensemble_json(e: Ensemble, metadata: dict) -> bytes:
    return json_bytes({
        "schema_version": SCHEMA_VERSION,
        "metadata": metadata,
        "times": e.grid.times,
        "paths": e.paths,
    })


def metadata(model: str, h: float, seed: int, scheme: dict, **extra) -> dict:
    """Provenance block written next to every simulation output."""
    out = {
        "schema_version": SCHEMA_VERSION,
        "library": "fimkit",
        "library_version": __version__,
        "model": model,
        "h": h,
        "seed": seed,
        "scheme": scheme,
    }
    out.update(extra)
    return out
