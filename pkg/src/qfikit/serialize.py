"""Deterministic JSON/CSV emission.

Floats are written with 17 significant digits so that a report round-trips
exactly and two runs on the same input are byte-identical.
"""

import csv
import io
import json
import math

import numpy as np


def fmt_float(x):
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r} cannot be serialized")
    if x == 0.0:
        return "0.0"
    s = format(x, ".17g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def to_plain(obj):
    """Convert numpy scalars/arrays and complex numbers to JSON-ready Python objects.

    Complex numbers become ``[re, im]`` pairs; arrays become nested row-major lists.
    """
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _emit(obj, indent, level, out):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for k, (key, val) in enumerate(obj.items()):
            out.append(pad + json.dumps(key) + ": ")
            _emit(val, indent, level + 1, out)
            out.append(",\n" if k < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
        elif all(not isinstance(v, (dict, list)) for v in obj):
            out.append("[" + ", ".join(_scalar(v) for v in obj) + "]")
        else:
            out.append("[\n")
            for k, val in enumerate(obj):
                out.append(pad)
                _emit(val, indent, level + 1, out)
                out.append(",\n" if k < len(obj) - 1 else "\n")
            out.append(end + "]")
    else:
        out.append(_scalar(obj))


def _scalar(v):
    if v is None or isinstance(v, (bool, str)):
        return json.dumps(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return fmt_float(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def dumps(obj, indent=2):
    out = []
    _emit(to_plain(obj), indent, 0, out)
    return "".join(out) + "\n"


def csv_dumps(columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(
            "" if row.get(c) is None else fmt_float(row[c]) if isinstance(row[c], float) else row[c]
            for c in columns
        )
    return buf.getvalue()
