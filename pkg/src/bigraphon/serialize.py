"""JSON schemas for the core value types.

Documents are plain dicts:

* bigraph:  {"v1": [ids], "v2": [ids], "edges": [[l, r], ...]}
* flag:     bigraph plus {"labels": [ids in label order]}
* kernel:   {"mu": [...], "nu": [...], "values": [[...], ...]}
* tree:     {"bags": [[ids], ...], "tree_edges": [[i, j], ...]}

Parsing enforces all type invariants; measure vectors whose sum is within
1e-9 of one are renormalized, anything further off is rejected.  Floats are
emitted at 15 significant digits, and parse -> serialize -> parse is the
identity.
"""

from __future__ import annotations

import json

import numpy as np

from .bigraph import Bigraph, Flag
from .decomp import TreeDecomposition
from .errors import SchemaError
from .stepfn import StepBigraphon

__all__ = [
    "bigraph_to_obj",
    "bigraph_from_obj",
    "flag_to_obj",
    "flag_from_obj",
    "kernel_to_obj",
    "kernel_from_obj",
    "tree_to_obj",
    "tree_from_obj",
    "dump_json",
    "parse_document",
]

MEASURE_SUM_TOL = 1e-9


def _expect(obj, field: str, kind, where: str):
    if not isinstance(obj, dict):
        raise SchemaError(where or ".", "expected a JSON object")
    if field not in obj:
        raise SchemaError(f"{where}{field}" if not where else f"{where}.{field}", "missing field")
    value = obj[field]
    if not isinstance(value, kind):
        raise SchemaError(
            f"{where}.{field}" if where else field,
            f"expected {kind.__name__ if isinstance(kind, type) else kind}",
        )
    return value


def _string_list(obj, field: str, where: str = "") -> list[str]:
    raw = _expect(obj, field, list, where)
    path = f"{where}.{field}" if where else field
    out = []
    for i, x in enumerate(raw):
        if not isinstance(x, str):
            raise SchemaError(f"{path}[{i}]", "vertex ids must be strings")
        out.append(x)
    return out


def bigraph_to_obj(g: Bigraph) -> dict:
    return {
        "v1": list(g.left),
        "v2": list(g.right),
        "edges": [[a, b] for a, b in g.sorted_edges],
    }


def bigraph_from_obj(obj) -> Bigraph:
    v1 = _string_list(obj, "v1")
    v2 = _string_list(obj, "v2")
    raw_edges = _expect(obj, "edges", list, "")
    edges = []
    for i, e in enumerate(raw_edges):
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, str) for x in e)):
            raise SchemaError(f"edges[{i}]", "expected a [left_id, right_id] pair")
        edges.append((e[0], e[1]))
    try:
        return Bigraph(tuple(v1), tuple(v2), edges)
    except ValueError as exc:
        raise SchemaError("edges" if "edge" in str(exc) else "v1", str(exc)) from exc


def flag_to_obj(f: Flag) -> dict:
    out = bigraph_to_obj(f.underlying)
    out["labels"] = list(f.labels)
    return out


def flag_from_obj(obj) -> Flag:
    g = bigraph_from_obj(obj)
    labels = _string_list(obj, "labels")
    try:
        return Flag(g, tuple(labels))
    except ValueError as exc:
        raise SchemaError("labels", str(exc)) from exc


def _measure(obj, field: str, length_hint: int | None = None) -> np.ndarray:
    raw = _expect(obj, field, list, "")
    vec = []
    for i, x in enumerate(raw):
        if not isinstance(x, (int, float)) or isinstance(x, bool):
            raise SchemaError(f"{field}[{i}]", "expected a number")
        vec.append(float(x))
    arr = np.asarray(vec)
    if arr.size == 0:
        raise SchemaError(field, "measure must be nonempty")
    if np.any(arr <= 0):
        raise SchemaError(field, "part measures must be strictly positive")
    total = float(arr.sum())
    if abs(total - 1.0) > MEASURE_SUM_TOL:
        raise SchemaError(field, f"part measures sum to {total!r}, expected 1")
    return arr / total


def kernel_to_obj(w: StepBigraphon) -> dict:
    return {
        "mu": w.mu.tolist(),
        "nu": w.nu.tolist(),
        "values": [row.tolist() for row in w.values],
    }


def kernel_from_obj(obj) -> StepBigraphon:
    mu = _measure(obj, "mu")
    nu = _measure(obj, "nu")
    raw = _expect(obj, "values", list, "")
    if len(raw) != mu.size:
        raise SchemaError("values", f"expected {mu.size} rows, got {len(raw)}")
    rows = []
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != nu.size:
            raise SchemaError(f"values[{i}]", f"expected a row of {nu.size} numbers")
        out_row = []
        for j, x in enumerate(row):
            if not isinstance(x, (int, float)) or isinstance(x, bool):
                raise SchemaError(f"values[{i}][{j}]", "expected a number")
            if x < 0:
                raise SchemaError(f"values[{i}][{j}]", f"negative value {x!r}")
            out_row.append(float(x))
        rows.append(out_row)
    try:
        return StepBigraphon(mu, nu, np.asarray(rows))
    except ValueError as exc:
        raise SchemaError("values", str(exc)) from exc


def tree_to_obj(t: TreeDecomposition) -> dict:
    return {
        "bags": [sorted(bag) for bag in t.bags],
        "tree_edges": [list(e) for e in t.tree_edges],
    }


def tree_from_obj(obj) -> TreeDecomposition:
    raw_bags = _expect(obj, "bags", list, "")
    bags = []
    for i, bag in enumerate(raw_bags):
        if not isinstance(bag, list) or not all(isinstance(x, str) for x in bag):
            raise SchemaError(f"bags[{i}]", "expected a list of vertex ids")
        bags.append(frozenset(bag))
    raw_edges = _expect(obj, "tree_edges", list, "")
    edges = []
    for i, e in enumerate(raw_edges):
        if not (
            isinstance(e, list)
            and len(e) == 2
            and all(isinstance(x, int) and not isinstance(x, bool) for x in e)
        ):
            raise SchemaError(f"tree_edges[{i}]", "expected a [bag_index, bag_index] pair")
        edges.append((e[0], e[1]))
    try:
        return TreeDecomposition(tuple(bags), tuple(edges))
    except ValueError as exc:
        raise SchemaError("tree_edges", str(exc)) from exc


_PARSERS = {
    "bigraph": bigraph_from_obj,
    "flag": flag_from_obj,
    "kernel": kernel_from_obj,
    "tree": tree_from_obj,
}


def parse_document(text: str, schema: str):
    """Parse a JSON document (by schema name) with invariant validation."""
    if schema not in _PARSERS:
        raise ValueError(f"unknown schema {schema!r}")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(".", f"invalid JSON: {exc}") from exc
    return _PARSERS[schema](obj)


def _round_floats(obj):
    """Round every float to 15 significant digits, recursively."""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, (np.floating, float)):
        return float(f"{float(obj):.15g}")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(x) for x in obj]
    return obj


def dump_json(obj) -> str:
    """Deterministic JSON text: sorted keys, floats at 15 significant digits."""
    return json.dumps(_round_floats(obj), sort_keys=True, separators=(",", ":"))
