"""Tree decompositions of bigraphs, the reflective condition, and the
integral identity that drives the density bound for reflective decompositions.

A tree decomposition of G is a tree whose nodes are bags of vertices covering
all vertices and edges, with the running-intersection property.  It is
*reflective* when, across each tree edge {U1, U2}, the flags obtained from
the two bag-induced subgraphs by labeling the shared vertices (in the host
graph's canonical vertex order, identically on both sides) have isomorphic
2-cores.  All bags of a reflective decomposition then share a common
unlabeled 2-core, the *core* of the decomposition.

``decomposition_weight`` computes, for a subtree T', the edge count of the
subtree-induced subgraph minus the summed edge counts of the per-tree-edge
flag 2-cores (computed from the separator-stripped flags, which makes each
summand orientation independent).  ``tree_ratio_check`` numerically verifies
the key identity behind the density bound: for a positive biregular kernel,
the ratio of the fully pinned density of G to the product of the per-edge
core tables, partially integrated down to any one bag, equals that bag's
pinned density table times the edge density raised to the weight difference.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .bigraph import (
    Bigraph,
    Flag,
    components,
    find_isomorphism,
    induced,
    is_connected,
    isomorphic,
    remove_edges,
    two_core,
)
from .errors import PreconditionError
from .stepfn import (
    CHECK_RTOL,
    StepBigraphon,
    biregularity_defect,
    density,
    edge_density,
    flag_density,
)

__all__ = [
    "TreeDecomposition",
    "DecompositionCheck",
    "ReflectiveCertificate",
    "TreeRatioReport",
    "DecompositionSearchResult",
    "verify_decomposition",
    "verify_reflective",
    "decomposition_weight",
    "tree_ratio_check",
    "find_reflective_decomposition",
]


@dataclass(frozen=True)
class TreeDecomposition:
    """Bags of vertex ids plus tree edges over bag indices."""

    bags: tuple[frozenset[str], ...]
    tree_edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "bags", tuple(frozenset(b) for b in self.bags))
        object.__setattr__(
            self, "tree_edges", tuple(tuple(int(x) for x in e) for e in self.tree_edges)
        )
        n = len(self.bags)
        if n == 0:
            raise ValueError("a tree decomposition needs at least one bag")
        if any(not b for b in self.bags):
            raise ValueError("bags must be nonempty")
        if len(self.tree_edges) != n - 1:
            raise ValueError("tree edge count must be one less than the bag count")
        nbr: dict[int, set[int]] = {i: set() for i in range(n)}
        for i, j in self.tree_edges:
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise ValueError(f"invalid tree edge ({i}, {j})")
            if j in nbr[i]:
                raise ValueError(f"duplicate tree edge ({i}, {j})")
            nbr[i].add(j)
            nbr[j].add(i)
        seen = {0}
        frontier = [0]
        while frontier:
            u = frontier.pop()
            for v in nbr[u]:
                if v not in seen:
                    seen.add(v)
                    frontier.append(v)
        if len(seen) != n:
            raise ValueError("tree edges do not connect all bags")

    def neighbors(self, i: int) -> list[int]:
        out = []
        for a, b in self.tree_edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)

    def path_between(self, i: int, j: int) -> list[int]:
        parent = {i: None}
        frontier = [i]
        while frontier:
            u = frontier.pop()
            if u == j:
                break
            for v in self.neighbors(u):
                if v not in parent:
                    parent[v] = u
                    frontier.append(v)
        out = [j]
        while parent[out[-1]] is not None:
            out.append(parent[out[-1]])
        return out[::-1]


@dataclass(frozen=True)
class DecompositionCheck:
    valid: bool
    violation: str | None = None
    detail: str | None = None


@dataclass(eq=False)
class ReflectiveCertificate:
    """Outcome of the reflectivity verification.

    When valid, ``core`` is the common unlabeled 2-core of the bag-induced
    subgraphs and ``per_edge_isos`` maps each tree edge to a label-preserving
    isomorphism between the two flag 2-cores across it.
    """

    valid: bool
    violated_condition: str | None = None
    violating_edge: tuple[int, int] | None = None
    detail: str | None = None
    core: Bigraph | None = None
    per_edge_isos: dict[tuple[int, int], dict[str, str]] = field(default_factory=dict)

    def __post_init__(self):
        if self.valid == (self.violated_condition is not None):
            raise ValueError("certificate must be valid exactly when no condition is violated")

    def to_obj(self) -> dict:
        from .serialize import bigraph_to_obj

        return {
            "valid": self.valid,
            "violated_condition": self.violated_condition,
            "violating_edge": list(self.violating_edge) if self.violating_edge else None,
            "detail": self.detail,
            "core": bigraph_to_obj(self.core) if self.core is not None else None,
            "per_edge_isos": [
                {"edge": list(e), "map": dict(sorted(m.items()))}
                for e, m in sorted(self.per_edge_isos.items())
            ],
        }


def _require_connected_nontrivial(g: Bigraph) -> None:
    if g.e == 0 or not is_connected(g):
        raise PreconditionError("decomposition checks need a connected bigraph with an edge")


def verify_decomposition(g: Bigraph, t: TreeDecomposition) -> DecompositionCheck:
    """Check vertex cover, edge cover, and running intersection, reporting the
    first violated condition."""
    _require_connected_nontrivial(g)
    known = set(g.vertices)
    for idx, bag in enumerate(t.bags):
        unknown = bag - known
        if unknown:
            raise ValueError(f"bag {idx} references unknown vertices {sorted(unknown)}")

    covered = set().union(*t.bags)
    if covered != known:
        missing = g.canonical_sort(known - covered)
        return DecompositionCheck(False, "covers_vertices", f"vertices {list(missing)} in no bag")

    for a, b in g.sorted_edges:
        if not any(a in bag and b in bag for bag in t.bags):
            return DecompositionCheck(
                False, "covers_edges", f"edge ({a}, {b}) inside no bag"
            )

    for i, j in itertools.combinations(range(len(t.bags)), 2):
        shared = t.bags[i] & t.bags[j]
        if not shared:
            continue
        for k in t.path_between(i, j):
            if not shared <= t.bags[k]:
                lost = g.canonical_sort(shared - t.bags[k])
                return DecompositionCheck(
                    False,
                    "running_intersection",
                    f"bags {i} and {j} share {list(lost)} but bag {k} on their path omits it",
                )
    return DecompositionCheck(True)


def _separator_flags(
    g: Bigraph, t: TreeDecomposition, i: int, j: int, strip_separator: bool
) -> tuple[Flag, Flag]:
    """The two flags across tree edge {i, j}: each bag's induced subgraph with
    the shared vertices labeled in the host graph's canonical order (the same
    order on both sides).  With ``strip_separator`` the edges inside the
    shared set are removed first."""
    shared = g.canonical_sort(t.bags[i] & t.bags[j])
    flags = []
    for bag in (t.bags[i], t.bags[j]):
        sub = induced(g, bag)
        if strip_separator:
            inner = {e for e in sub.edges if e[0] in shared and e[1] in shared}
            sub = remove_edges(sub, inner)
        flags.append(Flag(sub, shared))
    return flags[0], flags[1]


def verify_reflective(g: Bigraph, t: TreeDecomposition) -> ReflectiveCertificate:
    """Full reflectivity verification with a per-edge isomorphism witness.

    Both the plain and the separator-stripped flag formulations are checked;
    they are equivalent, so any disagreement is an internal error.  The core
    is extracted from bag 0 and cross-checked against every other bag.
    """
    base = verify_decomposition(g, t)
    if not base.valid:
        return ReflectiveCertificate(
            False, violated_condition=base.violation, detail=base.detail
        )

    isos: dict[tuple[int, int], dict[str, str]] = {}
    for i, j in t.tree_edges:
        fa, fb = _separator_flags(g, t, i, j, strip_separator=False)
        iso = find_isomorphism(two_core(fa), two_core(fb))
        fa2, fb2 = _separator_flags(g, t, i, j, strip_separator=True)
        iso2 = find_isomorphism(two_core(fa2), two_core(fb2))
        if (iso is None) != (iso2 is None):
            raise RuntimeError(
                "internal error: the two reflectivity formulations disagree on "
                f"tree edge ({i}, {j})"
            )
        if iso is None:
            return ReflectiveCertificate(
                False,
                violated_condition="reflectivity",
                violating_edge=(i, j),
                detail=f"flag 2-cores across tree edge ({i}, {j}) are not isomorphic",
            )
        isos[(i, j)] = iso

    core = two_core(induced(g, t.bags[0]))
    for idx in range(1, len(t.bags)):
        if not isomorphic(core, two_core(induced(g, t.bags[idx]))):
            raise RuntimeError(
                f"internal error: bag {idx} has a different 2-core despite "
                "reflectivity holding on every tree edge"
            )
    return ReflectiveCertificate(True, core=core, per_edge_isos=isos)


def _stripped_core_edge_count(g: Bigraph, t: TreeDecomposition, i: int, j: int) -> int:
    fa, fb = _separator_flags(g, t, i, j, strip_separator=True)
    ea = two_core(fa).underlying.e
    eb = two_core(fb).underlying.e
    if ea != eb:
        raise ValueError(
            f"tree edge ({i}, {j}) gives orientation-dependent core edge counts "
            f"{ea} vs {eb}; the decomposition is not reflective"
        )
    return ea


def _subtree_indices(t: TreeDecomposition, subtree) -> tuple[int, ...]:
    if subtree is None:
        return tuple(range(len(t.bags)))
    idx = tuple(sorted(set(int(i) for i in subtree)))
    if not idx:
        raise ValueError("subtree selection must be nonempty")
    if any(not 0 <= i < len(t.bags) for i in idx):
        raise ValueError(f"subtree indices out of range: {idx}")
    chosen = set(idx)
    seen = {idx[0]}
    frontier = [idx[0]]
    while frontier:
        u = frontier.pop()
        for v in t.neighbors(u):
            if v in chosen and v not in seen:
                seen.add(v)
                frontier.append(v)
    if seen != chosen:
        raise ValueError("subtree indices do not induce a connected subtree")
    return idx


def decomposition_weight(g: Bigraph, t: TreeDecomposition, subtree=None) -> int:
    """Edge count of the subtree-induced subgraph minus the summed edge counts
    of the separator-stripped flag 2-cores over the subtree's tree edges."""
    idx = _subtree_indices(t, subtree)
    chosen = set(idx)
    verts = set().union(*(t.bags[i] for i in idx))
    total = induced(g, verts).e
    for i, j in t.tree_edges:
        if i in chosen and j in chosen:
            total -= _stripped_core_edge_count(g, t, i, j)
    return total


@dataclass(eq=False)
class TreeRatioReport:
    bag_index: int
    d_t: int
    bag_edge_count: int
    max_residual: float
    z_residual: float
    z_value: float

    def to_obj(self) -> dict:
        return {
            "bag_index": self.bag_index,
            "d_T": self.d_t,
            "bag_edge_count": self.bag_edge_count,
            "max_residual": self.max_residual,
            "z_residual": self.z_residual,
            "Z": self.z_value,
        }


def tree_ratio_check(
    g: Bigraph, t: TreeDecomposition, w: StepBigraphon, bag_index: int
) -> TreeRatioReport:
    """Verify the partial-integration identity for a reflective decomposition
    on a strictly positive biregular kernel.

    Let f be the fully pinned density of G divided by the product, over tree
    edges, of the pinned 2-core tables evaluated on the shared vertices.
    Integrating f over all vertices outside the chosen bag must equal the
    bag's pinned density table times edge_density ** (weight - bag edges),
    for every pinned assignment; and the full integral Z of f must equal
    edge_density ** (weight - core edges) times the core's density.
    """
    cert = verify_reflective(g, t)
    if not cert.valid:
        raise PreconditionError(
            f"decomposition is not reflective: {cert.violated_condition} ({cert.detail})"
        )
    if not (0 <= bag_index < len(t.bags)):
        raise PreconditionError(f"bag index {bag_index} out of range")
    if w.values.min() <= 0:
        raise PreconditionError("kernel values must be strictly positive")
    t_rho = edge_density(w)
    if max(biregularity_defect(w)) > CHECK_RTOL * t_rho:
        raise PreconditionError("kernel must be biregular within tolerance")

    order = g.vertices
    axis = {v: k for k, v in enumerate(order)}
    dims = [w.m if g.side(v) == 1 else w.n for v in order]

    joint = flag_density(Flag(g, order), w, method="naive").values
    for i, j in t.tree_edges:
        fa, _ = _separator_flags(g, t, i, j, strip_separator=True)
        core_flag = two_core(fa)
        table = flag_density(core_flag, w).values
        shape = [1] * len(dims)
        for vid, size in zip(core_flag.labels, table.shape):
            shape[axis[vid]] = size
        joint = joint / table.reshape(shape)

    d_t = decomposition_weight(g, t)
    bag = g.canonical_sort(t.bags[bag_index])
    bag_set = set(bag)
    weighted = joint
    for vid in order:
        if vid in bag_set:
            continue
        weight = w.mu if g.side(vid) == 1 else w.nu
        shape = [1] * len(dims)
        shape[axis[vid]] = len(weight)
        weighted = weighted * weight.reshape(shape)
    outside = tuple(axis[v] for v in order if v not in bag_set)
    lhs = weighted.sum(axis=outside) if outside else weighted
    # Axes of lhs follow the canonical order of the bag's vertices already.

    sub = induced(g, bag_set)
    rhs = t_rho ** (d_t - sub.e) * flag_density(Flag(sub, bag), w).values
    max_residual = float((np.abs(lhs - rhs) / np.maximum(np.abs(rhs), 1e-300)).max())

    z = lhs
    for vid in bag:
        weight = w.mu if g.side(vid) == 1 else w.nu
        shape = [1] * z.ndim
        shape[0] = len(weight)
        z = (z * weight.reshape(shape)).sum(axis=0)
    z = float(z)
    core = cert.core
    z_expected = t_rho ** (d_t - core.e) * density(core, w)
    z_residual = abs(z - z_expected) / max(abs(z_expected), 1e-300)
    return TreeRatioReport(
        bag_index=bag_index,
        d_t=d_t,
        bag_edge_count=sub.e,
        max_residual=max_residual,
        z_residual=z_residual,
        z_value=z,
    )


@dataclass(eq=False)
class DecompositionSearchResult:
    decomposition: TreeDecomposition
    certificate: ReflectiveCertificate
    trivial: bool

    def to_obj(self) -> dict:
        return {
            "bags": [sorted(b) for b in self.decomposition.bags],
            "tree_edges": [list(e) for e in self.decomposition.tree_edges],
            "certificate": self.certificate.to_obj(),
            "trivial": self.trivial,
        }


def _partitions_into(items: list, k: int):
    """All partitions of items into exactly k nonempty groups (restricted
    growth strings)."""
    n = len(items)
    if k > n:
        return

    def rec(pos: int, labels: list[int], used: int):
        if pos == n:
            if used == k:
                groups = [[] for _ in range(k)]
                for it, lab in zip(items, labels):
                    groups[lab].append(it)
                yield groups
            return
        for lab in range(min(used + 1, k)):
            labels.append(lab)
            yield from rec(pos + 1, labels, max(used, lab + 1))
            labels.pop()

    yield from rec(0, [], 0)


def find_reflective_decomposition(
    g: Bigraph,
    max_bags: int = 3,
    time_budget: float = 10.0,
    exhaustive: bool = False,
) -> DecompositionSearchResult:
    """Search for a reflective decomposition with at least two bags.

    Separator-first heuristic: vertex subsets are enumerated by increasing
    size; the components left after deleting a separator are grouped into
    bags (separator plus component group) arranged along a path.  With
    ``exhaustive`` set, all two-bag covers are additionally tried.  Budget
    exhaustion is a normal outcome: the trivial single-bag decomposition is
    returned, marked trivial.
    """
    _require_connected_nontrivial(g)
    deadline = time.monotonic() + time_budget
    verts = g.vertices

    def attempt(bags: list[set[str]]) -> DecompositionSearchResult | None:
        t = TreeDecomposition(
            tuple(frozenset(b) for b in bags),
            tuple((i, i + 1) for i in range(len(bags) - 1)),
        )
        cert = verify_reflective(g, t)
        if cert.valid:
            return DecompositionSearchResult(t, cert, trivial=False)
        return None

    out_of_time = False
    for size in range(0, g.v - 1):
        if out_of_time:
            break
        for sep in itertools.combinations(verts, size):
            if time.monotonic() > deadline:
                out_of_time = True
                break
            rest = induced(g, set(verts) - set(sep))
            comps = [c for c in components(rest)]
            if len(comps) < 2:
                continue
            for k in range(2, min(max_bags, len(comps)) + 1):
                found = None
                for groups in _partitions_into(comps, k):
                    bags = [set(sep) | set().union(*grp) for grp in groups]
                    found = attempt(bags)
                    if found is not None:
                        break
                if found is not None:
                    return found

    if exhaustive and not out_of_time:
        others = list(verts)
        for assignment in itertools.product((0, 1, 2), repeat=len(others)):
            if time.monotonic() > deadline:
                break
            u1 = {v for v, a in zip(others, assignment) if a in (0, 2)}
            u2 = {v for v, a in zip(others, assignment) if a in (1, 2)}
            if not u1 or not u2 or u1 == set(verts) or u2 == set(verts):
                continue
            try:
                found = attempt([u1, u2])
            except ValueError:
                continue
            if found is not None:
                return found

    trivial_t = TreeDecomposition((frozenset(verts),), ())
    return DecompositionSearchResult(trivial_t, verify_reflective(g, trivial_t), trivial=True)
