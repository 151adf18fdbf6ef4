"""Step kernels on finite part spaces and their homomorphism densities.

A step kernel is a nonnegative matrix of values together with strictly
positive part measures on both sides summing to one.  The density of a
bigraph G in a kernel W is the measure-weighted sum, over all assignments
of left vertices to left parts and right vertices to right parts, of the
product of the values along the edges of G; flag densities pin the labeled
vertices instead of integrating them.

Two evaluation routes are provided and kept independent of each other:

* ``naive`` materializes the full joint assignment tensor and contracts it
  against the part measures; it is the defining sum, vectorized.
* ``treedp`` runs variable elimination in greedy min-fill order, i.e. a
  dynamic program over a tree decomposition of G.  Correctness is pinned to
  the naive route by the oracle-equivalence test suite.

Tolerance policy used throughout the package: algebraic identities are
checked at ``IDENTITY_RTOL`` (1e-12 relative), transform post-conditions at
``CHECK_RTOL`` (1e-9); the transforms take d-th roots, so exact rational
arithmetic is not generally possible and binary64 is used everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bigraph import Bigraph, Flag, dual as dual_bigraph, remove_edges
from .errors import PreconditionError

__all__ = [
    "IDENTITY_RTOL",
    "CHECK_RTOL",
    "MEASURE_ATOL",
    "StepBigraphon",
    "FlagDensityTable",
    "uniform_kernel",
    "constant_kernel",
    "density",
    "flag_density",
    "left_degrees",
    "right_degrees",
    "edge_density",
    "tensor",
    "tensor_power",
    "restrict",
    "dual_kernel",
    "scale",
    "biregularity_defect",
    "density_gradient",
]

IDENTITY_RTOL = 1e-12
CHECK_RTOL = 1e-9
MEASURE_ATOL = 1e-12

_NAIVE_CELL_LIMIT = 50_000_000


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class StepBigraphon:
    """Part measures (mu, nu) and an m x n matrix of nonnegative values."""

    mu: np.ndarray
    nu: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu", _frozen(self.mu))
        object.__setattr__(self, "nu", _frozen(self.nu))
        object.__setattr__(self, "values", _frozen(self.values))
        if self.mu.ndim != 1 or self.nu.ndim != 1 or self.values.ndim != 2:
            raise ValueError("mu and nu must be vectors and values a matrix")
        m, n = self.values.shape
        if m < 1 or n < 1 or self.mu.shape != (m,) or self.nu.shape != (n,):
            raise ValueError(
                f"shape mismatch: values {self.values.shape}, mu {self.mu.shape}, nu {self.nu.shape}"
            )
        for name, w in (("mu", self.mu), ("nu", self.nu)):
            if not np.all(w > 0):
                raise ValueError(f"{name} must be strictly positive")
            if abs(float(w.sum()) - 1.0) > MEASURE_ATOL:
                raise ValueError(f"{name} must sum to 1 within {MEASURE_ATOL}, got {w.sum()!r}")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ValueError("values must be finite and nonnegative")

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def sup_norm(self) -> float:
        return float(self.values.max())


def uniform_kernel(values) -> StepBigraphon:
    """Kernel with the given values and uniform part measures."""
    values = np.asarray(values, dtype=float)
    m, n = values.shape
    return StepBigraphon(np.full(m, 1.0 / m), np.full(n, 1.0 / n), values)


def constant_kernel(p: float, m: int = 1, n: int = 1) -> StepBigraphon:
    return uniform_kernel(np.full((m, n), float(p)))


@dataclass(frozen=True, eq=False)
class FlagDensityTable:
    """Flag density as a tensor with one axis per labeled vertex (label order).

    Because every part has positive measure, ``min`` and ``max`` over the
    entries realize the essential infimum and supremum exactly.
    """

    flag: Flag
    values: np.ndarray
    min: float
    max: float

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if np.any(self.values < 0):
            raise ValueError("flag density entries must be nonnegative")
        if self.values.ndim != self.flag.k:
            raise ValueError("table rank must equal the number of labels")
        if self.min != float(self.values.min()) or self.max != float(self.values.max()):
            raise ValueError("min/max inconsistent with entries")


def _axis_dims(g: Bigraph, w: StepBigraphon) -> dict[str, int]:
    dims = {v: w.m for v in g.left}
    dims.update({v: w.n for v in g.right})
    return dims


def _naive_table(g: Bigraph, w: StepBigraphon, pinned: tuple[str, ...]) -> np.ndarray:
    order = g.vertices
    axis = {vid: k for k, vid in enumerate(order)}
    dims = _axis_dims(g, w)
    shape = [dims[v] for v in order]
    cells = math.prod(shape) if shape else 1
    if cells > _NAIVE_CELL_LIMIT:
        raise PreconditionError(
            f"naive evaluation would need {cells} cells; use method='treedp'"
        )
    joint = np.ones(shape)
    for a, b in g.sorted_edges:
        es = [1] * len(shape)
        es[axis[a]] = w.m
        es[axis[b]] = w.n
        joint = joint * w.values.reshape(es)
    pinned_set = set(pinned)
    for vid in order:
        if vid in pinned_set:
            continue
        weight = w.mu if g.side(vid) == 1 else w.nu
        ws = [1] * len(shape)
        ws[axis[vid]] = len(weight)
        joint = joint * weight.reshape(ws)
    sum_axes = tuple(axis[v] for v in order if v not in pinned_set)
    table = joint.sum(axis=sum_axes) if sum_axes else joint
    remaining = [v for v in order if v in pinned_set]
    perm = [remaining.index(p) for p in pinned]
    return table.transpose(perm) if perm else table


def _contract_factors(factors, out_vars: tuple[str, ...], dims: dict[str, int]) -> np.ndarray:
    """Multiply factors (vars, array) and sum out everything not in out_vars."""
    factors = list(factors)
    covered = set()
    for fvars, _ in factors:
        covered.update(fvars)
    for v in out_vars:
        if v not in covered:
            factors.append(((v,), np.ones(dims[v])))
    if not factors:
        return np.ones([dims[v] for v in out_vars]) if out_vars else np.array(1.0)
    letters: dict[str, str] = {}

    def code(v: str) -> str:
        if v not in letters:
            letters[v] = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"[len(letters)]
        return letters[v]

    subs = ",".join("".join(code(v) for v in fvars) for fvars, _ in factors)
    out = "".join(code(v) for v in out_vars)
    arrays = [arr for _, arr in factors]
    optimize = "greedy" if len(arrays) > 2 else False
    return np.einsum(f"{subs}->{out}", *arrays, optimize=optimize)


def _treedp_table(g: Bigraph, w: StepBigraphon, pinned: tuple[str, ...]) -> np.ndarray:
    dims = _axis_dims(g, w)
    pinned_set = set(pinned)
    factors: list[tuple[tuple[str, ...], np.ndarray]] = [
        ((a, b), w.values) for a, b in g.sorted_edges
    ]
    for v in g.vertices:
        if v not in pinned_set:
            factors.append(((v,), w.mu if g.side(v) == 1 else w.nu))

    nbr = {v: set(g.neighbors(v)) for v in g.vertices}
    canon = g._index
    remaining = [v for v in g.vertices if v not in pinned_set]

    def fill(u: str) -> int:
        ns = list(nbr[u])
        return sum(
            1
            for i in range(len(ns))
            for j in range(i + 1, len(ns))
            if ns[j] not in nbr[ns[i]]
        )

    while remaining:
        v = min(remaining, key=lambda u: (fill(u), canon[u]))
        remaining.remove(v)
        live = [f for f in factors if v in f[0]]
        factors = [f for f in factors if v not in f[0]]
        out_vars = sorted(
            {x for fvars, _ in live for x in fvars if x != v}, key=canon.__getitem__
        )
        factors.append((tuple(out_vars), _contract_factors(live, tuple(out_vars), dims)))
        for x in nbr[v]:
            nbr[x].discard(v)
        for x in nbr[v]:
            for y in nbr[v]:
                if x != y:
                    nbr[x].add(y)
        del nbr[v]
    return _contract_factors(factors, pinned, dims)


def _table(g: Bigraph, w: StepBigraphon, pinned: tuple[str, ...], method: str) -> np.ndarray:
    if method == "auto":
        method = "treedp"
    if method == "naive":
        return _naive_table(g, w, pinned)
    if method == "treedp":
        return _treedp_table(g, w, pinned)
    raise ValueError(f"unknown method {method!r}")


def _orientation_key(g: Bigraph, w: StepBigraphon):
    idx = g._index
    return (
        g.v1,
        g.v2,
        tuple(sorted((idx[a], idx[b]) for a, b in g.edges)),
        w.values.shape,
        w.mu.tobytes(),
        w.nu.tobytes(),
        w.values.tobytes(),
    )


def density(g: Bigraph, w: StepBigraphon, method: str = "auto") -> float:
    """Homomorphism density of g in w.

    Isolated vertices contribute a factor of one.  ``auto`` resolves to the
    tree-decomposition dynamic program.  The pair (g, w) and its dual are
    evaluated through a canonical orientation, so the result is bitwise
    invariant under dualizing both arguments.
    """
    gd, wd = dual_bigraph(g), dual_kernel(w)
    if _orientation_key(gd, wd) < _orientation_key(g, w):
        g, w = gd, wd
    return float(_table(g, w, (), method))


def flag_density(f: Flag, w: StepBigraphon, method: str = "auto") -> FlagDensityTable:
    """Density table of a flag: labeled vertices are pinned to parts (one
    tensor axis per label, in label order), unlabeled ones integrated out.

    Integrating the table against the part measures over its axes recovers
    the density of the underlying bigraph.
    """
    table = _table(f.underlying, w, f.labels, method)
    return FlagDensityTable(f, table, float(table.min()), float(table.max()))


def left_degrees(w: StepBigraphon) -> np.ndarray:
    """Per-left-part density of the left-rooted edge flag: values @ nu."""
    return w.values @ w.nu


def right_degrees(w: StepBigraphon) -> np.ndarray:
    """Per-right-part density of the right-rooted edge flag: mu @ values."""
    return w.mu @ w.values


def edge_density(w: StepBigraphon) -> float:
    return float(w.mu @ w.values @ w.nu)


def tensor(w1: StepBigraphon, w2: StepBigraphon) -> StepBigraphon:
    """Tensor product: part measures multiply and values multiply coordinatewise,
    so the product kernel evaluates (x1,x2),(y1,y2) to W1(x1,y1)*W2(x2,y2)."""
    return StepBigraphon(
        np.kron(w1.mu, w2.mu), np.kron(w1.nu, w2.nu), np.kron(w1.values, w2.values)
    )


def tensor_power(w: StepBigraphon, k: int) -> StepBigraphon:
    if k < 1:
        raise PreconditionError(f"tensor power requires k >= 1, got {k}")
    out = w
    for _ in range(k - 1):
        out = tensor(out, w)
    return out


def _select_masses(name: str, masses, full: np.ndarray) -> np.ndarray:
    if masses is None:
        return full.copy()
    masses = np.asarray(masses, dtype=float)
    if masses.shape != full.shape:
        raise ValueError(f"{name} selection must have shape {full.shape}")
    if np.any(masses < 0) or np.any(masses > full * (1 + 1e-12) + 1e-300):
        raise ValueError(f"{name} selection masses must lie in [0, part measure]")
    return np.minimum(masses, full)


def _restrict_side(name: str, masses, full: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if masses is None:
        return np.arange(len(full)), full
    masses = _select_masses(name, masses, full)
    total = float(masses.sum())
    if total <= 0:
        raise PreconditionError(f"restriction must select positive {name} mass")
    kept = np.nonzero(masses > 0)[0]
    return kept, masses[kept] / total


def restrict(
    w: StepBigraphon, left_masses=None, right_masses=None
) -> StepBigraphon:
    """Restriction to a weighted sub-selection of parts.

    ``left_masses[i]`` is the retained mass of left part i (0 drops the part,
    a value strictly between 0 and mu[i] keeps a measurable fraction of the
    atom; the part keeps its value row).  Measures are renormalized by the
    selected total.  None keeps a side fully, unchanged.
    """
    li, mu2 = _restrict_side("left", left_masses, w.mu)
    ri, nu2 = _restrict_side("right", right_masses, w.nu)
    return StepBigraphon(mu2, nu2, w.values[np.ix_(li, ri)])


def dual_kernel(w: StepBigraphon) -> StepBigraphon:
    """Transpose the values and swap the part measures."""
    return StepBigraphon(w.nu, w.mu, w.values.T)


def scale(w: StepBigraphon, c: float) -> StepBigraphon:
    """Multiply all values by c >= 0, so densities scale by c**e(G)."""
    if c < 0:
        raise PreconditionError(f"scale factor must be nonnegative, got {c}")
    return StepBigraphon(w.mu, w.nu, c * w.values)


def biregularity_defect(w: StepBigraphon) -> tuple[float, float]:
    """Sup-norm distance of each side's point degrees from the edge density;
    (0, 0) exactly when the kernel is biregular."""
    t = edge_density(w)
    return (
        float(np.abs(left_degrees(w) - t).max()),
        float(np.abs(right_degrees(w) - t).max()),
    )


def density_gradient(g: Bigraph, w: StepBigraphon) -> np.ndarray:
    """Analytic gradient of density(g, .) in the kernel values.

    Entry (i, j) sums, over the edges (v, w) of g, the density of g with that
    edge removed and v, w pinned to parts (i, j), times mu[i] * nu[j]; this is
    the exact derivative of the multilinear density form.
    """
    grad = np.zeros((w.m, w.n))
    weight = np.outer(w.mu, w.nu)
    for a, b in g.sorted_edges:
        pinned_flag = Flag(remove_edges(g, {(a, b)}), (a, b))
        grad += weight * flag_density(pinned_flag, w).values
    return grad
