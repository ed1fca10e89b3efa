"""Deterministic JSON output and schema validation.

Floats are always written with 17 significant digits so repeated runs give
byte-identical files.
"""
from __future__ import annotations

import json
import math
from importlib import resources

import numpy as np


def _fmt(obj, indent, level):
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            raise ValueError(f"cannot serialise non-finite float {obj!r}")
        return "%.17g" % float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        pad = " " * (indent * (level + 1))
        items = [f"{pad}{json.dumps(str(k))}: {_fmt(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + " " * (indent * level) + "}"
    if isinstance(obj, (list, tuple)):
        # numeric leaves stay on one line
        return "[" + ", ".join(_fmt(v, indent, level + 1) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _fmt(obj, indent, 0) + "\n"


def load_schema(name: str) -> dict:
    text = resources.files("spherelight").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(obj, name: str) -> None:
    import jsonschema

    jsonschema.validate(obj, load_schema(name))
