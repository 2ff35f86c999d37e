"""JSON with 17 significant digits and atomic file writes."""
import json
import math
import os
import tempfile
from fractions import Fraction

import numpy as np

from .errors import IoError

SCHEMA_VERSION = 1


def _fmt(x):
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _emit(obj, out, indent, level):
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," if indent else ", "
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append(json.dumps(None if obj is None else bool(obj)))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt(float(obj)))
    elif isinstance(obj, Fraction):
        out.append(_fmt(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            out.append((sep if i else "") + pad + json.dumps(str(k)) + ": ")
            _emit(v, out, indent, level + 1)
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        out.append("[")
        for i, v in enumerate(seq):
            out.append((sep if i else "") + pad)
            _emit(v, out, indent, level + 1)
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2):
    out = []
    _emit(obj, out, indent, 0)
    return "".join(out)


def atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(d, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except OSError as e:
        raise IoError(str(e)) from e


def write_json(path, obj):
    atomic_write(path, dumps(obj) + "\n")


def read_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as e:
        raise IoError(str(e)) from e
