"""Shared test helpers: independent oracles and random instance factories.

The oracles here are deliberately disjoint from the library's evaluation
code: ``brute_density`` enumerates assignments in pure Python, and
``peel_two_core`` removes one low-degree vertex at a time in a caller-chosen
order.
"""

import itertools
import math

import numpy as np
import pytest

from bigraphon import Bigraph, Flag, StepBigraphon


def brute_density(g: Bigraph, w: StepBigraphon) -> float:
    """Defining sum of the density, enumerated in pure Python."""
    left = list(g.left)
    right = list(g.right)
    edges = [(left.index(a), right.index(b)) for a, b in g.sorted_edges]
    mu = w.mu.tolist()
    nu = w.nu.tolist()
    vals = w.values.tolist()
    total = 0.0
    for xs in itertools.product(range(w.m), repeat=len(left)):
        mx = math.prod(mu[i] for i in xs)
        for ys in itertools.product(range(w.n), repeat=len(right)):
            term = mx * math.prod(nu[j] for j in ys)
            for a, b in edges:
                term *= vals[xs[a]][ys[b]]
            total += term
    return total


def brute_flag_table(f: Flag, w: StepBigraphon) -> np.ndarray:
    """Pinned density table by pure-Python enumeration."""
    g = f.underlying
    dims = [w.m if g.side(v) == 1 else w.n for v in f.labels]
    out = np.zeros(dims) if dims else np.zeros(())
    free = [v for v in g.vertices if v not in f.labels]
    free_dims = [w.m if g.side(v) == 1 else w.n for v in free]
    edges = list(g.sorted_edges)
    for pinned in itertools.product(*(range(d) for d in dims)):
        assign = dict(zip(f.labels, pinned))
        total = 0.0
        for rest in itertools.product(*(range(d) for d in free_dims)):
            assign.update(zip(free, rest))
            term = 1.0
            for v, part in zip(free, rest):
                term *= w.mu[part] if g.side(v) == 1 else w.nu[part]
            for a, b in edges:
                term *= w.values[assign[a], assign[b]]
            total += term
        out[pinned] = total
    return out


def peel_two_core(f: Flag, rng) -> set[str]:
    """Remove one removable vertex at a time in random order; return the
    surviving vertex set."""
    g = f.underlying
    keep = set(g.vertices)
    labeled = set(f.labels)
    while True:
        removable = [
            v for v in sorted(keep)
            if v not in labeled and len(g.neighbors(v) & keep) < 2
        ]
        if not removable:
            return keep
        keep.remove(removable[rng.integers(len(removable))])


def random_kernel(rng, m: int, n: int, low: float = 0.0, high: float = 1.0,
                  uniform_measures: bool = False) -> StepBigraphon:
    if uniform_measures:
        mu = np.full(m, 1.0 / m)
        nu = np.full(n, 1.0 / n)
    else:
        mu = rng.uniform(0.5, 1.5, m)
        mu /= mu.sum()
        nu = rng.uniform(0.5, 1.5, n)
        nu /= nu.sum()
    return StepBigraphon(mu, nu, rng.uniform(low, high, (m, n)))


def random_symmetric_kernel(rng, n: int, low: float = 0.1, high: float = 1.0) -> StepBigraphon:
    mu = rng.uniform(0.5, 1.5, n)
    mu /= mu.sum()
    v = rng.uniform(low, high, (n, n))
    return StepBigraphon(mu, mu, (v + v.T) / 2)


def random_bigraph(rng, max_side: int = 6, p: float = 0.5) -> Bigraph:
    a = int(rng.integers(1, max_side + 1))
    b = int(rng.integers(1, max_side + 1))
    edges = {
        (f"L{i}", f"R{j}")
        for i in range(a)
        for j in range(b)
        if rng.random() < p
    }
    return Bigraph(
        tuple(f"L{i}" for i in range(a)),
        tuple(f"R{j}" for j in range(b)),
        edges,
    )


def rel_err(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
