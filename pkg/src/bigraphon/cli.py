"""Batch command-line front end.

Inputs are JSON documents given as file paths or inline text (anything
starting with ``{`` is treated as inline).  Every command prints one JSON
report to stdout with floats at 15 significant digits; output is
deterministic given the inputs and the ``--seed`` flag.

Exit codes: 0 on success, 1 on input errors (bad JSON, schema violations,
unknown flags), 2 on operation precondition violations.
"""

from __future__ import annotations

import argparse
import os
import sys

from .bigraph import edge
from .decomp import (
    decomposition_weight,
    find_reflective_decomposition,
    tree_ratio_check,
    verify_reflective,
)
from .errors import PreconditionError, SchemaError
from .search import (
    counterexample_search,
    sidorenko_gap,
    tensor_power_check,
    weak_domination_evidence,
)
from .serialize import (
    dump_json,
    kernel_to_obj,
    parse_document,
)
from .stepfn import density, flag_density
from .transforms import (
    biregularize,
    flag_regularize,
    lower_regularize,
    stars_pipeline,
    symmetric_flag_regularize,
)

__all__ = ["main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # Input errors (including unknown options) must exit 1, not argparse's 2.
    def error(self, message):
        raise _UsageError(message)


def _load(arg: str, schema: str):
    if arg.lstrip().startswith("{"):
        return parse_document(arg, schema)
    if not os.path.exists(arg):
        raise SchemaError(".", f"no such file: {arg}")
    with open(arg, "r", encoding="utf-8") as fh:
        return parse_document(fh.read(), schema)


def _cmd_density(args) -> dict:
    g = _load(args.graph, "bigraph")
    w = _load(args.kernel, "kernel")
    return {"t": density(g, w, args.method), "method": args.method, "edge_count": g.e}


def _cmd_flag_density(args) -> dict:
    f = _load(args.flag, "flag")
    w = _load(args.kernel, "kernel")
    table = flag_density(f, w, args.method)
    return {
        "labels": list(f.labels),
        "values": table.values.tolist(),
        "min": table.min,
        "max": table.max,
    }


def _cmd_regularize(args) -> dict:
    f = _load(args.flag, "flag")
    w = _load(args.kernel, "kernel")
    w2, report = flag_regularize(w, f, args.d, args.epsilon)
    return {"kernel": kernel_to_obj(w2), "report": report.to_obj()}


def _cmd_lower_reg(args) -> dict:
    w = _load(args.kernel, "kernel")
    w2, trace = lower_regularize(w, alpha=args.alpha)
    return {"kernel": kernel_to_obj(w2), "trace": trace.to_obj()}


def _cmd_pipeline(args) -> dict:
    w = _load(args.kernel, "kernel")
    return biregularize(w).to_obj()


def _cmd_stars(args) -> dict:
    w = _load(args.kernel, "kernel")
    return stars_pipeline(w, args.d).to_obj()


def _cmd_symmetric(args) -> dict:
    f = _load(args.flag, "flag")
    w = _load(args.kernel, "kernel")
    w2, report = symmetric_flag_regularize(w, f, args.d, args.epsilon)
    return {"kernel": kernel_to_obj(w2), "report": report.to_obj()}


def _cmd_certify(args) -> dict:
    g = _load(args.graph, "bigraph")
    t = _load(args.tree, "tree")
    return verify_reflective(g, t).to_obj()


def _cmd_dt(args) -> dict:
    g = _load(args.graph, "bigraph")
    t = _load(args.tree, "tree")
    subtree = None
    if args.subtree:
        subtree = [int(x) for x in args.subtree.split(",")]
    return {"d_T": decomposition_weight(g, t, subtree)}


def _cmd_intft(args) -> dict:
    g = _load(args.graph, "bigraph")
    t = _load(args.tree, "tree")
    w = _load(args.kernel, "kernel")
    reports = [tree_ratio_check(g, t, w, i).to_obj() for i in range(len(t.bags))]
    return {
        "bags": reports,
        "max_residual": max(r["max_residual"] for r in reports),
        "max_z_residual": max(r["z_residual"] for r in reports),
    }


def _cmd_find_decomposition(args) -> dict:
    g = _load(args.graph, "bigraph")
    return find_reflective_decomposition(
        g, max_bags=args.max_bags, time_budget=args.time_budget
    ).to_obj()


def _cmd_gap(args) -> dict:
    g = _load(args.graph, "bigraph")
    w = _load(args.kernel, "kernel")
    return sidorenko_gap(g, w).to_obj()


def _cmd_evidence(args) -> dict:
    if len(args.graph) != 2:
        raise _UsageError("evidence needs exactly two --graph inputs")
    g1 = _load(args.graph[0], "bigraph")
    g2 = _load(args.graph[1], "bigraph")
    return weak_domination_evidence(g1, g2, args.samples, args.seed).to_obj()


def _cmd_search(args) -> dict:
    g = _load(args.graph, "bigraph")
    return counterexample_search(
        g,
        parts=tuple(args.parts),
        restarts=args.restarts,
        steps=args.steps,
        learning_rate=args.learning_rate,
        seed=args.seed,
    ).to_obj()


def _cmd_tensor_check(args) -> dict:
    graphs = [_load(spec, "bigraph") for spec in args.graph]
    # Default comparison: each given bigraph against the single edge raised
    # to its edge count, the usual normalization of the gap inequality.
    lhs = [(g, 1.0) for g in graphs]
    rhs = [(edge(), float(sum(g.e for g in graphs)))]
    w = _load(args.kernel, "kernel")
    return tensor_power_check(lhs, rhs, args.c, w, args.kmax)


def _build_parser() -> _Parser:
    parser = _Parser(prog="bigraphon", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(handler=handler)
        return p

    p = add("density", _cmd_density, help="density of a bigraph in a kernel")
    p.add_argument("--graph", required=True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--method", choices=["naive", "treedp", "auto"], default="auto")

    p = add("flag-density", _cmd_flag_density, help="pinned density table of a flag")
    p.add_argument("--flag", required=True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--method", choices=["naive", "treedp", "auto"], default="auto")

    p = add("regularize", _cmd_regularize, help="flag-degree regularization rewrite")
    p.add_argument("--flag", required=True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)

    p = add("lower-reg", _cmd_lower_reg, help="trim low-degree mass")
    p.add_argument("--kernel", required=True)
    p.add_argument("--alpha", type=float, default=None)

    p = add("pipeline", _cmd_pipeline, help="five-stage biregularization")
    p.add_argument("--kernel", required=True)

    p = add("stars", _cmd_stars, help="three-stage star-density pipeline")
    p.add_argument("--kernel", required=True)
    p.add_argument("--d", type=int, required=True)

    p = add("symmetric", _cmd_symmetric, help="symmetric regularization rewrite")
    p.add_argument("--flag", required=True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)

    p = add("certify", _cmd_certify, help="verify a reflective tree decomposition")
    p.add_argument("--graph", required=True)
    p.add_argument("--tree", required=True)

    p = add("dt", _cmd_dt, help="decomposition weight of a (sub)tree")
    p.add_argument("--graph", required=True)
    p.add_argument("--tree", required=True)
    p.add_argument("--subtree", default=None, help="comma-separated bag indices")

    p = add("intft", _cmd_intft, help="partial-integration identity residuals per bag")
    p.add_argument("--graph", required=True)
    p.add_argument("--tree", required=True)
    p.add_argument("--kernel", required=True)

    p = add("find-decomposition", _cmd_find_decomposition, help="search for a reflective decomposition")
    p.add_argument("--graph", required=True)
    p.add_argument("--max-bags", type=int, default=3)
    p.add_argument("--time-budget", type=float, default=10.0)

    p = add("gap", _cmd_gap, help="density gap report")
    p.add_argument("--graph", required=True)
    p.add_argument("--kernel", required=True)

    p = add("evidence", _cmd_evidence, help="weak-domination evidence on biregular kernels")
    p.add_argument("--graph", action="append", required=True, help="give twice: first and second bigraph")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)

    p = add("search", _cmd_search, help="projected gradient descent on the gap")
    p.add_argument("--graph", required=True)
    p.add_argument("--parts", type=int, nargs=2, default=[3, 3])
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--seed", type=int, required=True)

    p = add("tensor-check", _cmd_tensor_check, help="tensor-power identity and amplification")
    p.add_argument("--graph", action="append", required=True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--kmax", type=int, default=3)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        out = args.handler(args)
    except (SchemaError, _UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PreconditionError as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(dump_json(out))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
