"""Deterministic serialization of reports and numeric series.

Identical payloads must produce byte-identical files, so JSON is emitted
by a small canonical printer: keys sorted, floats always rendered with 17
significant digits, newline-terminated.  Non-finite floats appear as the
bare tokens Infinity / -Infinity / NaN, which Python's json module reads
back.  Complex values are {"im": ..., "re": ...} objects.
"""
from __future__ import annotations

import dataclasses
import json
import math

import numpy as np


def float_token(x):
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    token = format(x, ".17g")
    if not any(c in token for c in ".eE"):
        token += ".0"
    return token


def to_jsonable(obj):
    """Reduce dataclasses, arrays, and numpy scalars to plain JSON types
    (with complex numbers as re/im objects)."""
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        return obj
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.ndarray):
        return [to_jsonable(row) for row in obj.tolist()] if obj.ndim else to_jsonable(obj.item())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {_key(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _key(k):
    if isinstance(k, str):
        return k
    if isinstance(k, (int, np.integer)):
        return str(int(k))
    if isinstance(k, (float, np.floating)):
        return float_token(k)
    if isinstance(k, tuple) and all(isinstance(p, (int, np.integer)) for p in k):
        return "->".join(str(int(p)) for p in k)
    raise TypeError(f"cannot use {k!r} as a JSON key")


def emit_json(obj, indent=0):
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return float_token(obj)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        body = ",\n".join(inner + emit_json(v, indent + 1) for v in obj)
        return "[\n" + body + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        body = ",\n".join(
            inner + json.dumps(k) + ": " + emit_json(obj[k], indent + 1) for k in sorted(obj)
        )
        return "{\n" + body + "\n" + pad + "}"
    raise TypeError(f"emit_json got unreduced {type(obj).__name__}; run to_jsonable first")


def write_report(path, payload):
    text = emit_json(to_jsonable(payload)) + "\n"
    with open(path, "wb") as fh:
        fh.write(text.encode("utf-8"))


def write_csv(path, header, rows):
    """Write a numeric CSV with the same 17-significant-digit rendering as
    the reports (inf and nan in C form, as numpy reads them back)."""

    def cell(x):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")

    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(cell(x) for x in row))
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("utf-8"))
