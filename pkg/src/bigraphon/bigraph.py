"""Bipartite graphs with a fixed bipartition, and partially labeled flags.

Vertex ids are opaque strings.  Builders use a canonical numbering so the
documented examples are reproducible: left vertices are ``"L0", "L1", ...``
and right vertices ``"R0", "R1", ...`` in construction order.  The canonical
order of a graph's vertices is its left list followed by its right list.

All types are immutable values; every operation returns a new object.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import PreconditionError

__all__ = [
    "Bigraph",
    "Flag",
    "DegreeProfile",
    "edge",
    "star",
    "path",
    "even_cycle",
    "book",
    "complete_bipartite",
    "standard",
    "induced",
    "remove_vertex",
    "remove_edges",
    "dual",
    "degree_profile",
    "left_edge_flag",
    "right_edge_flag",
    "left_star_flag",
    "amalgamate",
    "flag_power",
    "two_core",
    "find_isomorphism",
    "isomorphic",
    "is_connected",
    "components",
    "connected_bigraphs",
    "trees",
]


@dataclass(frozen=True)
class Bigraph:
    """A bipartite graph with fixed sides; edges run from left to right."""

    left: tuple[str, ...]
    right: tuple[str, ...]
    edges: frozenset[tuple[str, str]] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "left", tuple(self.left))
        object.__setattr__(self, "right", tuple(self.right))
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        left_set, right_set = set(self.left), set(self.right)
        if len(left_set) != len(self.left) or len(right_set) != len(self.right):
            raise ValueError("duplicate vertex id within a side")
        overlap = left_set & right_set
        if overlap:
            raise ValueError(f"left and right vertex sets overlap: {sorted(overlap)}")
        for a, b in self.edges:
            if a not in left_set:
                raise ValueError(f"edge endpoint {a!r} is not a left vertex")
            if b not in right_set:
                raise ValueError(f"edge endpoint {b!r} is not a right vertex")

    @property
    def v1(self) -> int:
        return len(self.left)

    @property
    def v2(self) -> int:
        return len(self.right)

    @property
    def v(self) -> int:
        return len(self.left) + len(self.right)

    @property
    def e(self) -> int:
        return len(self.edges)

    @property
    def vertices(self) -> tuple[str, ...]:
        """All vertex ids in canonical order (left list, then right list)."""
        return self.left + self.right

    @cached_property
    def _index(self) -> dict[str, int]:
        return {vid: k for k, vid in enumerate(self.vertices)}

    @cached_property
    def _adjacency(self) -> dict[str, frozenset[str]]:
        nbrs: dict[str, set[str]] = {vid: set() for vid in self.vertices}
        for a, b in self.edges:
            nbrs[a].add(b)
            nbrs[b].add(a)
        return {vid: frozenset(s) for vid, s in nbrs.items()}

    @cached_property
    def sorted_edges(self) -> tuple[tuple[str, str], ...]:
        """Edges sorted by canonical endpoint order, for deterministic iteration."""
        return tuple(sorted(self.edges, key=lambda e: (self._index[e[0]], self._index[e[1]])))

    def side(self, vid: str) -> int:
        if vid not in self._index:
            raise ValueError(f"unknown vertex {vid!r}")
        return 1 if self._index[vid] < self.v1 else 2

    def degree(self, vid: str) -> int:
        if vid not in self._index:
            raise ValueError(f"unknown vertex {vid!r}")
        return len(self._adjacency[vid])

    def neighbors(self, vid: str) -> frozenset[str]:
        return self._adjacency[vid]

    def has_edge(self, a: str, b: str) -> bool:
        return (a, b) in self.edges

    def canonical_sort(self, vids) -> tuple[str, ...]:
        """Sort a collection of this graph's vertex ids into canonical order."""
        return tuple(sorted(vids, key=self._index.__getitem__))


@dataclass(frozen=True)
class DegreeProfile:
    delta1: int
    Delta1: int
    delta2: int
    Delta2: int
    left_regular_degree: int | None
    right_regular_degree: int | None

    @property
    def biregular(self) -> bool:
        return self.left_regular_degree is not None and self.right_regular_degree is not None


@dataclass(frozen=True)
class Flag:
    """A bigraph with an injective sequence of labeled vertices.

    Labels are positional: two flags carry "the same label" at a vertex when
    it occupies the same position in both label sequences.
    """

    underlying: Bigraph
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labeling must be injective")
        known = set(self.underlying.vertices)
        for vid in self.labels:
            if vid not in known:
                raise ValueError(f"labeled vertex {vid!r} not in the underlying bigraph")

    @property
    def k(self) -> int:
        return len(self.labels)

    def label_sides(self) -> tuple[int, ...]:
        return tuple(self.underlying.side(v) for v in self.labels)


def _check_positive(name: str, value: int) -> None:
    if value < 1:
        raise PreconditionError(f"{name} must be >= 1, got {value}")


def edge() -> Bigraph:
    """Single edge L0-R0."""
    return Bigraph(("L0",), ("R0",), {("L0", "R0")})


def star(d: int) -> Bigraph:
    """Left star: one left vertex L0 joined to right vertices R0..R{d-1}."""
    _check_positive("d", d)
    return Bigraph(("L0",), tuple(f"R{j}" for j in range(d)), {("L0", f"R{j}") for j in range(d)})


def path(n: int) -> Bigraph:
    """Path on n vertices, alternating sides starting on the left.

    Vertex i is L{i//2} for even i and R{i//2} for odd i; consecutive
    vertices are joined, giving n-1 edges.
    """
    _check_positive("n", n)
    names = [f"L{i // 2}" if i % 2 == 0 else f"R{i // 2}" for i in range(n)]
    edges = set()
    for i in range(n - 1):
        a, b = names[i], names[i + 1]
        edges.add((a, b) if i % 2 == 0 else (b, a))
    return Bigraph(
        tuple(nm for i, nm in enumerate(names) if i % 2 == 0),
        tuple(nm for i, nm in enumerate(names) if i % 2 == 1),
        edges,
    )


def even_cycle(n: int) -> Bigraph:
    """Cycle on n vertices (n even, n >= 4): L0-R0-L1-R1-...-L0."""
    if n < 4 or n % 2 != 0:
        raise PreconditionError(f"cycle length must be an even integer >= 4, got {n}")
    k = n // 2
    edges = set()
    for i in range(k):
        edges.add((f"L{i}", f"R{i}"))
        edges.add((f"L{(i + 1) % k}", f"R{i}"))
    return Bigraph(tuple(f"L{i}" for i in range(k)), tuple(f"R{i}" for i in range(k)), edges)


def book(k: int) -> Bigraph:
    """k four-cycles glued along the common spine edge L0-R0.

    Page i (1 <= i <= k) adds Li and Ri with edges L0-Ri, Li-R0, Li-Ri;
    so v = 2k+2 and e = 3k+1.
    """
    _check_positive("k", k)
    edges = {("L0", "R0")}
    for i in range(1, k + 1):
        edges |= {("L0", f"R{i}"), (f"L{i}", "R0"), (f"L{i}", f"R{i}")}
    return Bigraph(
        tuple(f"L{i}" for i in range(k + 1)),
        tuple(f"R{i}" for i in range(k + 1)),
        edges,
    )


def complete_bipartite(m: int, n: int) -> Bigraph:
    """All m*n edges between L0..L{m-1} and R0..R{n-1}."""
    _check_positive("m", m)
    _check_positive("n", n)
    return Bigraph(
        tuple(f"L{i}" for i in range(m)),
        tuple(f"R{j}" for j in range(n)),
        {(f"L{i}", f"R{j}") for i in range(m) for j in range(n)},
    )


_STANDARD = {
    "edge": edge,
    "star": star,
    "path": path,
    "even_cycle": even_cycle,
    "book": book,
    "complete_bipartite": complete_bipartite,
}


def standard(kind: str, *params: int) -> Bigraph:
    """Dispatch to a named builder: edge, star, path, even_cycle, book, complete_bipartite."""
    if kind not in _STANDARD:
        raise ValueError(f"unknown standard bigraph kind {kind!r}")
    return _STANDARD[kind](*params)


def induced(g: Bigraph, vids) -> Bigraph:
    """Subgraph induced by the given vertex set (keeps exactly the inner edges)."""
    keep = set(vids)
    unknown = keep - set(g.vertices)
    if unknown:
        raise ValueError(f"unknown vertices {sorted(unknown)}")
    return Bigraph(
        tuple(v for v in g.left if v in keep),
        tuple(v for v in g.right if v in keep),
        {(a, b) for (a, b) in g.edges if a in keep and b in keep},
    )


def remove_vertex(g: Bigraph, vid: str) -> Bigraph:
    if vid not in set(g.vertices):
        raise ValueError(f"unknown vertex {vid!r}")
    return induced(g, set(g.vertices) - {vid})


def remove_edges(g: Bigraph, drop) -> Bigraph:
    drop = {tuple(e) for e in drop}
    missing = drop - g.edges
    if missing:
        raise ValueError(f"unknown edges {sorted(missing)}")
    return Bigraph(g.left, g.right, g.edges - drop)


def dual(g: Bigraph) -> Bigraph:
    """Swap the two sides and reverse every edge pair."""
    return Bigraph(g.right, g.left, {(b, a) for (a, b) in g.edges})


def degree_profile(g: Bigraph) -> DegreeProfile:
    ld = [g.degree(v) for v in g.left] or [0]
    rd = [g.degree(v) for v in g.right] or [0]
    d1, D1 = min(ld), max(ld)
    d2, D2 = min(rd), max(rd)
    return DegreeProfile(
        d1, D1, d2, D2,
        left_regular_degree=d1 if d1 == D1 else None,
        right_regular_degree=d2 if d2 == D2 else None,
    )


def left_edge_flag() -> Flag:
    """Single edge with its left endpoint labeled."""
    return Flag(edge(), ("L0",))


def right_edge_flag() -> Flag:
    """Single edge with its right endpoint labeled."""
    return Flag(edge(), ("R0",))


def left_star_flag(d: int) -> Flag:
    """Left d-star with the center labeled."""
    return Flag(star(d), ("L0",))


def _same_type(f1: Flag, f2: Flag) -> bool:
    """Do the labeled parts of f1 and f2 induce isomorphic labeled sub-bigraphs
    under the position-to-position correspondence?"""
    if f1.k != f2.k or f1.label_sides() != f2.label_sides():
        return False
    g1, g2 = f1.underlying, f2.underlying
    for i, j in itertools.permutations(range(f1.k), 2):
        a1, b1 = f1.labels[i], f1.labels[j]
        if g1.side(a1) != 1 or g1.side(b1) != 2:
            continue
        if g1.has_edge(a1, b1) != g2.has_edge(f2.labels[i], f2.labels[j]):
            return False
    return True


def amalgamate(f1: Flag, f2: Flag) -> Flag:
    """Glue two flags of the same type: disjoint union with equally labeled
    vertices identified.

    The result uses fresh canonical ids: ``s{i}`` for the i-th labeled vertex,
    ``a{j}``/``b{j}`` for the j-th unlabeled vertex of f1/f2 in canonical order.
    """
    if not _same_type(f1, f2):
        raise PreconditionError("flags are not of the same type (labeled parts differ)")
    rename1 = {v: f"s{i}" for i, v in enumerate(f1.labels)}
    rename2 = {v: f"s{i}" for i, v in enumerate(f2.labels)}
    for j, v in enumerate(u for u in f1.underlying.vertices if u not in rename1):
        rename1[v] = f"a{j}"
    for j, v in enumerate(u for u in f2.underlying.vertices if u not in rename2):
        rename2[v] = f"b{j}"
    left = [rename1[v] for v in f1.underlying.left]
    left += [rename2[v] for v in f2.underlying.left if rename2[v] not in left]
    right = [rename1[v] for v in f1.underlying.right]
    right += [rename2[v] for v in f2.underlying.right if rename2[v] not in right]
    edges = {(rename1[a], rename1[b]) for (a, b) in f1.underlying.edges}
    edges |= {(rename2[a], rename2[b]) for (a, b) in f2.underlying.edges}
    glued = Bigraph(tuple(left), tuple(right), edges)
    return Flag(glued, tuple(f"s{i}" for i in range(f1.k)))


def flag_power(f: Flag, k: int) -> Flag:
    """k-fold amalgamation of a flag with itself (k = 1 returns the flag)."""
    _check_positive("k", k)
    out = f
    for _ in range(k - 1):
        out = amalgamate(out, f)
    return out


def _two_core_flag(f: Flag) -> Flag:
    g = f.underlying
    keep = set(g.vertices)
    labeled = set(f.labels)
    while True:
        removable = [
            v for v in keep
            if v not in labeled and len(g.neighbors(v) & keep) < 2
        ]
        if not removable:
            break
        keep.difference_update(removable)
    return Flag(induced(g, keep), f.labels)


def two_core(obj):
    """Maximal sub-flag (or sub-bigraph) in which every unlabeled vertex has
    degree at least two; obtained by peeling low-degree vertices, labeled
    vertices never removed.  Disconnected input is peeled per component.
    """
    if isinstance(obj, Bigraph):
        return _two_core_flag(Flag(obj)).underlying
    return _two_core_flag(obj)


def _as_flag(obj) -> Flag:
    return obj if isinstance(obj, Flag) else Flag(obj)


def find_isomorphism(a, b) -> dict[str, str] | None:
    """A side- and label-preserving isomorphism from a to b, or None.

    Exact backtracking with degree/side pruning; intended for instances up to
    roughly 20 vertices.  Deterministic: candidates are tried in canonical order.
    """
    fa, fb = _as_flag(a), _as_flag(b)
    ga, gb = fa.underlying, fb.underlying
    if (ga.v1, ga.v2, ga.e, fa.k) != (gb.v1, gb.v2, gb.e, fb.k):
        return None
    if sorted(ga.degree(v) for v in ga.left) != sorted(gb.degree(v) for v in gb.left):
        return None
    if sorted(ga.degree(v) for v in ga.right) != sorted(gb.degree(v) for v in gb.right):
        return None

    mapping: dict[str, str] = {}
    used: set[str] = set()
    for va, vb in zip(fa.labels, fb.labels):
        if ga.side(va) != gb.side(vb) or ga.degree(va) != gb.degree(vb):
            return None
        mapping[va] = vb
        used.add(vb)

    # Assign remaining vertices preferring those with many already-assigned
    # neighbors, so adjacency constraints prune early.
    order: list[str] = []
    placed = set(mapping)
    pool = [v for v in ga.vertices if v not in placed]
    while pool:
        nxt = max(pool, key=lambda v: (len(ga.neighbors(v) & placed), ga.degree(v), -ga._index[v]))
        order.append(nxt)
        placed.add(nxt)
        pool.remove(nxt)

    b_by_side = {1: gb.left, 2: gb.right}

    def consistent(u: str, w: str) -> bool:
        for x, fx in mapping.items():
            if ga.side(x) == ga.side(u):
                continue
            ue, we = (u, x) if ga.side(u) == 1 else (x, u)
            ve, fe = (w, fx) if ga.side(u) == 1 else (fx, w)
            if ga.has_edge(ue, we) != gb.has_edge(ve, fe):
                return False
        return True

    def backtrack(pos: int) -> bool:
        if pos == len(order):
            return True
        u = order[pos]
        for w in b_by_side[ga.side(u)]:
            if w in used or gb.degree(w) != ga.degree(u):
                continue
            if not consistent(u, w):
                continue
            mapping[u] = w
            used.add(w)
            if backtrack(pos + 1):
                return True
            del mapping[u]
            used.remove(w)
        return False

    return dict(mapping) if backtrack(0) else None


def isomorphic(a, b) -> bool:
    """Side-preserving (and, for flags, label-preserving) isomorphism test."""
    return find_isomorphism(a, b) is not None


def components(g: Bigraph) -> list[set[str]]:
    seen: set[str] = set()
    out: list[set[str]] = []
    for root in g.vertices:
        if root in seen:
            continue
        comp = {root}
        frontier = [root]
        while frontier:
            v = frontier.pop()
            for w in g.neighbors(v):
                if w not in comp:
                    comp.add(w)
                    frontier.append(w)
        seen |= comp
        out.append(comp)
    return out


def is_connected(g: Bigraph) -> bool:
    return len(components(g)) <= 1


def _canonical_masks(a: int, b: int) -> np.ndarray:
    """Representative edge-set bitmasks of a x b bigraphs, one per class under
    row/column permutations.  Bit i*b+j encodes the edge (Li, Rj)."""
    nbits = a * b
    masks = np.arange(1 << nbits, dtype=np.int64)
    if a == 1 or b == 1:
        # Classes are determined by the edge count alone.
        return np.array([(1 << k) - 1 for k in range(nbits + 1)], dtype=np.int64)
    canon = masks.copy()
    for pr in itertools.permutations(range(a)):
        for pc in itertools.permutations(range(b)):
            permuted = np.zeros_like(masks)
            for i in range(a):
                for j in range(b):
                    src = i * b + j
                    dst = pr[i] * b + pc[j]
                    permuted |= ((masks >> src) & 1) << dst
            np.minimum(canon, permuted, out=canon)
    return masks[canon == masks]


def connected_bigraphs(max_vertices: int):
    """Yield all connected bigraphs with at most max_vertices vertices, one
    representative per (side-preserving) isomorphism class.

    Both side-size orderings (a, b) and (b, a) are produced, since swapping
    sides is not an isomorphism of bigraphs.
    """
    _check_positive("max_vertices", max_vertices)
    yield Bigraph(("L0",), ())
    if max_vertices >= 1:
        yield Bigraph((), ("R0",))
    for total in range(2, max_vertices + 1):
        for a in range(1, total):
            b = total - a
            for mask in _canonical_masks(a, b):
                mask = int(mask)
                edges = {
                    (f"L{i}", f"R{j}")
                    for i in range(a)
                    for j in range(b)
                    if mask >> (i * b + j) & 1
                }
                g = Bigraph(
                    tuple(f"L{i}" for i in range(a)),
                    tuple(f"R{j}" for j in range(b)),
                    edges,
                )
                if is_connected(g):
                    yield g


def _prufer_tree_edges(seq: tuple[int, ...], n: int) -> list[tuple[int, int]]:
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    edges = []
    ptr = 0
    leaf = -1
    # Standard linear-time decode.
    deg = degree[:]
    import heapq

    heap = [i for i in range(n) if deg[i] == 1]
    heapq.heapify(heap)
    for x in seq:
        leaf = heapq.heappop(heap)
        edges.append((leaf, x))
        deg[x] -= 1
        if deg[x] == 1:
            heapq.heappush(heap, x)
    u = heapq.heappop(heap)
    w = heapq.heappop(heap)
    edges.append((u, w))
    del ptr, leaf
    return edges


def _tree_to_bigraph(n: int, edges: list[tuple[int, int]]) -> Bigraph:
    color = {0: 0}
    frontier = [0]
    nbrs: dict[int, list[int]] = {i: [] for i in range(n)}
    for u, w in edges:
        nbrs[u].append(w)
        nbrs[w].append(u)
    while frontier:
        u = frontier.pop()
        for w in nbrs[u]:
            if w not in color:
                color[w] = 1 - color[u]
                frontier.append(w)
    name = {}
    li = ri = 0
    for i in range(n):
        if color[i] == 0:
            name[i] = f"L{li}"
            li += 1
        else:
            name[i] = f"R{ri}"
            ri += 1
    bedges = {
        (name[u], name[w]) if color[u] == 0 else (name[w], name[u])
        for u, w in edges
    }
    return Bigraph(
        tuple(f"L{i}" for i in range(li)),
        tuple(f"R{j}" for j in range(ri)),
        bedges,
    )


def trees(max_vertices: int):
    """All trees with at most max_vertices vertices as bigraphs, up to
    isomorphism, including both bipartition orientations."""
    _check_positive("max_vertices", max_vertices)
    kept: list[Bigraph] = []

    def add(g: Bigraph) -> None:
        key = (g.v1, g.v2, g.e)
        for h in kept:
            if (h.v1, h.v2, h.e) == key and isomorphic(g, h):
                return
        kept.append(g)

    add(Bigraph(("L0",), ()))
    add(Bigraph((), ("R0",)))
    for n in range(2, max_vertices + 1):
        if n == 2:
            candidates = [edge()]
        else:
            candidates = [
                _tree_to_bigraph(n, _prufer_tree_edges(seq, n))
                for seq in itertools.product(range(n), repeat=n - 2)
            ]
        for g in candidates:
            add(g)
            add(dual(g))
    return list(kept)
