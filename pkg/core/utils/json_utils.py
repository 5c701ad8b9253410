# core/utils/json_utils.py
from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, is_dataclass
from typing import Any

import numpy as np


# ----------------------------
# Key normalization
# ----------------------------
# Config keys are case-folded, trimmed and have inner whitespace/dashes turned into "_".
#   "Sampler.N-Iter" -> "sampler.n_iter"
#   " hyper . a_mu " -> "hyper.a_mu"

def normalize_key(key: str) -> str:
    k = (key or "").strip().lower()
    k = re.sub(r"\s*\.\s*", ".", k)
    k = re.sub(r"[\s\-]+", "_", k)
    return k


# ----------------------------
# Plain-JSON conversion
# ----------------------------
# numpy scalars/arrays -> Python numbers/lists, dataclasses -> dicts,
# nonfinite floats -> strings so the output stays strict JSON.

def to_jsonable(node: Any) -> Any:
    if is_dataclass(node) and not isinstance(node, type):
        return to_jsonable(asdict(node))
    if isinstance(node, dict):
        return {str(k): to_jsonable(v) for k, v in node.items()}
    if isinstance(node, (list, tuple)):
        return [to_jsonable(v) for v in node]
    if isinstance(node, np.ndarray):
        return to_jsonable(node.tolist())
    if isinstance(node, np.integer):
        return int(node)
    if isinstance(node, (float, np.floating)):
        value = float(node)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(node, np.bool_):
        return bool(node)
    return node


def dumps_stable(node: Any) -> str:
    """Sorted keys and fixed indentation, so equal inputs give byte-identical text."""
    return json.dumps(to_jsonable(node), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
