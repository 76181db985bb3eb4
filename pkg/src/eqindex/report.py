"""Deterministic report emitters.

Floats are written with 17 significant digits and complex numbers as
``{"re": .., "im": ..}`` so identical runs give byte-identical output.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .fixed_point import CharacterReport


def _float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def _plain(obj):
    """Reduce numpy and complex values to JSON-ready Python objects."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    obj = _plain(obj)
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{dumps(k)}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if not obj:
        return "[]"
    items = [pad + dumps(v, indent, _level + 1) for v in obj]
    return "[\n" + ",\n".join(items) + "\n" + end + "]"


def character_dict(c: CharacterReport) -> dict:
    return {
        "group_parameter": c.group_parameter,
        "labels": list(c.labels),
        "per_component": list(c.per_component),
        "total": c.total,
        "oracle_value": c.oracle_value,
        "abs_error": c.abs_error,
    }


def report_dict(rep) -> dict:
    out = {
        "scene": rep.scene,
        "version": rep.version,
        "config_hash": rep.config_hash,
        "config": rep.config,
        "passed": rep.passed,
        "checks": [{"name": c.name, "value": c.value, "bound": c.bound, "kind": c.kind, "passed": c.passed}
                   for c in rep.checks],
        "characters": [character_dict(c) for c in rep.characters],
        "diagnostics": rep.diagnostics,
        "sweeps": rep.sweeps,
    }
    if rep.timings:
        out["timings"] = rep.timings
    return out


def to_json(rep) -> str:
    return dumps(report_dict(rep)) + "\n"


def to_csv(rep) -> str:
    """One row per swept quantity: ``scene, sweep, key, field, re, im``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scene", "sweep", "key", "field", "re", "im"])
    for row in rep.sweeps:
        key_name = "t" if "t" in row else "mesh"
        key = row.get(key_name)
        for name, v in row.items():
            if name in ("sweep", key_name):
                continue
            z = complex(v)
            w.writerow([rep.scene, row["sweep"], _float(float(key)).strip('"'), name,
                        _float(z.real).strip('"'), _float(z.imag).strip('"')])
    return buf.getvalue()


def render(rep, fmt: str) -> str:
    return to_csv(rep) if fmt == "csv" else to_json(rep)


def check_table(rep) -> str:
    lines = [f"{'check':32s} {'value':>24s} {'bound':>12s}  status"]
    for c in rep.checks:
        op = "<=" if c.kind == "max" else ">="
        lines.append(f"{c.name:32s} {c.value:24.17g} {op}{c.bound:10.3g}  {'pass' if c.passed else 'FAIL'}")
    return "\n".join(lines)
