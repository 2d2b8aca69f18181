from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Sequence

import numpy as np


def fmt(x) -> str:
    """Floats with 17 significant digits; everything else via ``str``."""
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if x is None:
        return ""
    return str(x)


def tail_window(values: Sequence[float]) -> Sequence[float]:
    """Entries with index in ``[N // 2, N]`` where ``N = len(values) - 1``."""
    last = len(values) - 1
    return values[last // 2:]


def tail_inf_exceeds_one(log_values: Sequence[float], margin: float) -> tuple[float, bool]:
    """Infimum over the tail window, and whether it exceeds ``1 + margin``.

    Works in log space; returns the infimum exponentiated.
    """
    low = min(tail_window(log_values))
    return math.exp(low), low > math.log1p(margin)


def wald_stderr(hits: int, n: int) -> float:
    if n <= 0:
        return float("nan")
    p = hits / n
    return math.sqrt(p * (1.0 - p) / n)


def _json_scalar(x) -> str:
    if isinstance(x, (bool, np.bool_)) or x is None:
        return json.dumps(None if x is None else bool(x))
    if isinstance(x, float):
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return format(x, ".17g")
    if isinstance(x, (int, str)):
        return json.dumps(x)
    if isinstance(x, (np.integer,)):
        return str(int(x))
    if isinstance(x, (np.floating,)):
        return _json_scalar(float(x))
    if isinstance(x, Fraction):
        return json.dumps(str(x))
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float printed to 17 significant digits; keys sorted."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in sorted(obj.items())]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_json_scalar(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    return _json_scalar(obj)
