"""Byte-stable JSON and plain-text rendering of reports."""

from __future__ import annotations

import json
import math

import numpy as np


def _float(v: float) -> str:
    if not math.isfinite(v):
        return "null"
    return format(v, ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with floats at 17 significant digits and keys in insertion order."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, (list, tuple)):
        return "(" + ", ".join(_fmt(x) for x in v) + ")"
    return str(v)


def render_text(doc: dict) -> str:
    lines = [f"{doc['command']} on {doc['scenario']}  (phicontract {doc['version']})"]
    for rep in doc.get("reports", []):
        status = "PASS" if rep.get("pass") else "FAIL"
        lines.append(f"  [{status}] {rep['check_id']}: worst margin {_fmt(rep['worst_margin'])}, "
                     f"{rep['pairs_scanned']} scanned, {rep.get('violations', 0)} violations")
        for w in rep.get("witnesses", []):
            lines.append(f"      at {_fmt(w['points'])}: lhs {_fmt(w['lhs'])} rhs {_fmt(w['rhs'])} "
                         f"margin {_fmt(w['margin'])}")
    for key in ("hypotheses", "lemma3_violations", "iterate", "inverse", "corollary2", "falsify", "result", "error"):
        if key in doc:
            val = doc[key]
            if isinstance(val, dict):
                lines.append(f"  {key}:")
                for k, v in val.items():
                    if isinstance(v, (dict, list)) and k in ("evidence", "per_start"):
                        continue
                    lines.append(f"    {k}: {_fmt(v)}")
            else:
                lines.append(f"  {key}: {_fmt(val)}")
    return "\n".join(lines)
