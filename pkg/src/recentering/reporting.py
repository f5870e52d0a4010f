"""Byte-stable JSON and CSV output.

Floats are written with 17 significant digits, keys are sorted, complex
numbers become ``{"im": ..., "re": ...}`` and non-finite floats become the
strings ``"nan"``, ``"inf"``, ``"-inf"``.
"""

import csv
import json
import math
import os

import numpy as np

__all__ = ["to_plain", "dumps", "write_json", "write_table", "fmt_float"]


def fmt_float(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = format(x, ".17g")
    # keep floats recognisable as floats after a round trip
    return s if any(ch in s for ch in ".en") else s + ".0"


def to_plain(obj):
    """Recursively convert numpy scalars/arrays, tuples and complex values."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        items = [f"{pad}{_encode(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        s = fmt_float(obj)
        return s if math.isfinite(obj) else json.dumps(s)
    return json.dumps(obj)


def dumps(obj, indent=2):
    return _encode(to_plain(obj), indent, 0) + "\n"


def write_json(obj, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps(obj))


def write_table(path, columns, rows):
    """CSV with a header row; floats at 17 significant digits."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
