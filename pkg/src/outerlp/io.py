"""JSON documents for spaces, functions, grids and decompositions.

Infinite values are written as the string ``"inf"``; NaN is rejected.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .decomposition import Decomposition
from .dyadic import Box, CellFunction, DyadicDecomposition, DyadicGrid, build_grid
from .finite import ExplicitTable, FiniteOuterSpace, Generators, build_space

INF = math.inf


def encode(x):
    """Recursively convert to JSON-safe values."""
    if isinstance(x, dict):
        return {str(k): encode(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [encode(v) for v in x]
    if isinstance(x, np.ndarray):
        return encode(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            raise ValueError("NaN cannot be serialized")
        if math.isinf(x):
            if x < 0:
                raise ValueError("-inf cannot be serialized")
            return "inf"
        return x
    return x


def decode_number(x):
    if x == "inf":
        return INF
    return float(x)


def dumps(obj) -> str:
    return json.dumps(encode(obj), sort_keys=False)


def _label(x):
    return tuple(_label(v) for v in x) if isinstance(x, list) else x


# ---------------------------------------------------------------- finite

def space_to_dict(space: FiniteOuterSpace) -> dict:
    doc = {"kind": "finite_space", "points": list(space.labels), "weights": space.weights}
    if space.generators is not None:
        doc["generators"] = [{"set": list(space.labels_of(m)), "sigma": v}
                             for m, v in space.generators]
    else:
        doc["table"] = [{"set": list(space.labels_of(m)), "mu": v}
                        for m, v in enumerate(space.table)]
    return encode(doc)


def space_from_dict(doc: dict) -> FiniteOuterSpace:
    if doc.get("kind") != "finite_space":
        raise ValueError("not a finite_space document")
    labels = [_label(x) for x in doc["points"]]
    w = [decode_number(x) for x in doc["weights"]]
    if "generators" in doc:
        src = Generators([([_label(x) for x in g["set"]], decode_number(g["sigma"]))
                          for g in doc["generators"]])
    else:
        src = ExplicitTable([([_label(x) for x in g["set"]], decode_number(g["mu"]))
                             for g in doc["table"]])
    return build_space(labels, w, src)


def function_to_dict(values) -> dict:
    return encode({"kind": "point_function", "values": np.asarray(values, dtype=float)})


def function_from_dict(doc: dict) -> np.ndarray:
    return np.array([decode_number(x) for x in doc["values"]])


def decomposition_to_dict(space: FiniteOuterSpace, dec: Decomposition) -> dict:
    return encode({"kind": "decomposition", "k_max": dec.k_max, "levels": dec.records(space)})


def decomposition_from_dict(space: FiniteOuterSpace, doc: dict) -> Decomposition:
    levels = {int(e["k"]): space.mask_of([_label(x) for x in e["set"]]) for e in doc["levels"]}
    return Decomposition(levels, int(doc["k_max"]))


# ---------------------------------------------------------------- dyadic

def grid_to_dict(grid: DyadicGrid) -> dict:
    return {"kind": "dyadic_grid", "d": grid.d, "j_min": grid.j_min, "j_max": grid.j_max}


def grid_from_dict(doc: dict) -> DyadicGrid:
    return build_grid(int(doc["d"]), int(doc["j_min"]), int(doc["j_max"]))


def cell_function_to_dict(F: CellFunction) -> dict:
    return encode({"kind": "cell_function", "grid": grid_to_dict(F.grid), "levels": list(F.values)})


def cell_function_from_dict(doc: dict) -> CellFunction:
    grid = grid_from_dict(doc["grid"])
    vals = []
    for v in doc["levels"]:
        a = np.array(v, dtype=object)
        vals.append(np.vectorize(decode_number, otypes=[float])(a) if a.size else a.astype(float))
    return CellFunction(grid, tuple(vals))


def _box(doc) -> Box:
    return Box(int(doc["j"]), tuple(int(i) for i in doc["idx"]))


def dyadic_decomposition_to_dict(dec: DyadicDecomposition) -> dict:
    return encode({
        "kind": "dyadic_decomposition",
        "grid": grid_to_dict(dec.grid),
        "r": dec.r,
        "k_top": dec.k_top,
        "selected": [{"k": k, "n": n, "box": {"j": b.j, "idx": list(b.idx)}} for k, n, b in dec.selected],
        "doubling": [{"k": k, "boxes": [{"j": b.j, "idx": list(b.idx)} for b in bs]}
                     for k, bs in sorted(dec.doubling.items(), reverse=True)],
    })


def dyadic_decomposition_from_dict(doc: dict) -> DyadicDecomposition:
    grid = grid_from_dict(doc["grid"])
    sel = tuple((int(e["k"]), int(e["n"]), _box(e["box"])) for e in doc["selected"])
    dbl = {int(e["k"]): tuple(_box(b) for b in e["boxes"]) for e in doc["doubling"]}
    return DyadicDecomposition(grid, decode_number(doc["r"]), sel, dbl, int(doc["k_top"]))
