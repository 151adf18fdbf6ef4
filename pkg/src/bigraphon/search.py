"""Numerical exploration of the density inequality t(G, W) >= t(rho, W)**e(G):
gap evaluation, weak-domination evidence on biregular kernels, projected
gradient descent toward counterexamples, and tensor-power amplification
checks.

Nothing here proves or disproves anything: a nonnegative minimum over samples
is evidence only, while a genuinely negative gap would be a concrete
counterexample candidate worth re-deriving by hand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bigraph import Bigraph, edge
from .errors import PreconditionError
from .stepfn import (
    IDENTITY_RTOL,
    StepBigraphon,
    biregularity_defect,
    density,
    density_gradient,
    edge_density,
    tensor_power,
)

__all__ = [
    "GapReport",
    "EvidenceReport",
    "CounterexampleSearchResult",
    "sidorenko_gap",
    "sample_biregular",
    "weak_domination_evidence",
    "counterexample_search",
    "tensor_power_check",
]

_EVIDENCE_SHAPES = ((2, 2), (3, 3), (2, 3), (3, 2))


@dataclass(eq=False)
class GapReport:
    """Gap of one bigraph against one kernel: t_graph - t_edge ** e."""

    graph: Bigraph
    kernel_summary: dict
    t_graph: float
    t_edge: float
    gap: float
    ratio: float | None

    def __post_init__(self):
        baseline = self.t_edge ** self.graph.e
        if abs(self.gap - (self.t_graph - baseline)) > IDENTITY_RTOL * max(
            abs(self.t_graph), baseline, 1.0
        ):
            raise ValueError("gap inconsistent with densities")
        if self.ratio is not None:
            if abs(self.ratio * baseline - self.t_graph) > IDENTITY_RTOL * max(
                abs(self.t_graph), 1.0
            ):
                raise ValueError("ratio inconsistent with densities")

    def to_obj(self) -> dict:
        return {
            "kernel": self.kernel_summary,
            "t_graph": self.t_graph,
            "t_edge": self.t_edge,
            "edge_count": self.graph.e,
            "gap": self.gap,
            "ratio": self.ratio,
        }


def sidorenko_gap(g: Bigraph, w: StepBigraphon) -> GapReport:
    """Evaluate t(G, W) - t(rho, W)**e(G) and the corresponding ratio."""
    t_graph = density(g, w)
    t_edge = density(edge(), w)
    baseline = t_edge ** g.e
    return GapReport(
        graph=g,
        kernel_summary={"parts": [w.m, w.n], "sup_norm": w.sup_norm, "edge_density": t_edge},
        t_graph=t_graph,
        t_edge=t_edge,
        gap=t_graph - baseline,
        ratio=t_graph / baseline if t_edge > 0 else None,
    )


def sample_biregular(
    rng: np.random.Generator,
    m: int,
    n: int,
    tol: float = 1e-10,
    max_iterations: int = 5000,
) -> StepBigraphon | None:
    """One random strictly positive biregular kernel, or None on
    non-convergence of the scaling iteration.

    Values start uniform on [0.1, 1] and part measures are random; alternating
    measure-weighted row/column scaling then drives both sides' point degrees
    to the common edge density (a matrix-scaling fixed point), which always
    converges for strictly positive matrices.
    """
    mu = rng.uniform(0.5, 1.5, m)
    mu /= mu.sum()
    nu = rng.uniform(0.5, 1.5, n)
    nu /= nu.sum()
    values = rng.uniform(0.1, 1.0, (m, n))
    for _ in range(max_iterations):
        values = values / (values @ nu)[:, None]
        values = values / (mu @ values)[None, :]
        t = float(mu @ values @ nu)
        defect = max(
            float(np.abs(values @ nu - t).max()), float(np.abs(mu @ values - t).max())
        )
        if defect <= tol * t:
            return StepBigraphon(mu, nu, values)
    return None


@dataclass(eq=False)
class EvidenceReport:
    """Minimum, over sampled biregular kernels, of the normalized-ratio
    difference between two bigraphs; negative refutes weak domination, a
    nonnegative minimum is evidence only."""

    graphs: tuple[Bigraph, Bigraph]
    seed: int
    samples: int
    rejected: int
    min_difference: float
    worst_kernel: StepBigraphon

    def __post_init__(self):
        recomputed = _ratio_difference(self.graphs[0], self.graphs[1], self.worst_kernel)
        if abs(recomputed - self.min_difference) > IDENTITY_RTOL * max(
            abs(recomputed), 1.0
        ):
            raise ValueError("stored minimum inconsistent with the stored worst kernel")

    def to_obj(self) -> dict:
        from .serialize import kernel_to_obj

        return {
            "seed": self.seed,
            "samples": self.samples,
            "rejected": self.rejected,
            "min_difference": self.min_difference,
            "worst_kernel": kernel_to_obj(self.worst_kernel),
        }


def _ratio_difference(g1: Bigraph, g2: Bigraph, w: StepBigraphon) -> float:
    t_edge = edge_density(w)
    return density(g1, w) / t_edge ** g1.e - density(g2, w) / t_edge ** g2.e


def weak_domination_evidence(
    g1: Bigraph, g2: Bigraph, samples: int, seed: int
) -> EvidenceReport:
    """Sample random positive biregular kernels and report the minimum of
    ratio(g1) - ratio(g2), where ratio(g) = t(g, W) / t(rho, W)**e(g).

    Kernel shapes cycle deterministically through small sizes; a rejected
    (non-converged) sample is replaced and counted.  Fixed seed means a
    byte-for-byte reproducible report.
    """
    if samples < 1:
        raise PreconditionError(f"samples must be >= 1, got {samples}")
    rng = np.random.default_rng(seed)
    best: tuple[float, StepBigraphon] | None = None
    rejected = 0
    produced = 0
    while produced < samples:
        m, n = _EVIDENCE_SHAPES[produced % len(_EVIDENCE_SHAPES)]
        w = sample_biregular(rng, m, n)
        if w is None:
            rejected += 1
            continue
        produced += 1
        diff = _ratio_difference(g1, g2, w)
        if best is None or diff < best[0]:
            best = (diff, w)
    return EvidenceReport(
        graphs=(g1, g2),
        seed=seed,
        samples=samples,
        rejected=rejected,
        min_difference=best[0],
        worst_kernel=best[1],
    )


@dataclass(eq=False)
class CounterexampleSearchResult:
    best: GapReport
    best_kernel: StepBigraphon
    initial_gap: float
    restarts: int
    steps: int

    def to_obj(self) -> dict:
        from .serialize import kernel_to_obj

        out = self.best.to_obj()
        out["best_kernel"] = kernel_to_obj(self.best_kernel)
        out["initial_gap"] = self.initial_gap
        out["restarts"] = self.restarts
        out["steps"] = self.steps
        return out


def counterexample_search(
    g: Bigraph,
    parts: tuple[int, int] = (3, 3),
    restarts: int = 3,
    steps: int = 200,
    learning_rate: float = 0.5,
    seed: int = 0,
) -> CounterexampleSearchResult:
    """Projected gradient descent on the gap over value matrices with fixed
    uniform part measures.

    The step size is fixed and iterates are projected to nonnegative values;
    restarts compensate for the lack of a line search.  The best gap over all
    iterates of all restarts is reported (monotone best-so-far), together
    with its kernel.  Never claims a disproof.
    """
    m, n = parts
    if m < 1 or n < 1:
        raise PreconditionError(f"part counts must be >= 1, got {parts}")
    rng = np.random.default_rng(seed)
    mu = np.full(m, 1.0 / m)
    nu = np.full(n, 1.0 / n)
    weight = np.outer(mu, nu)
    e = g.e

    def gap_of(values: np.ndarray) -> tuple[float, StepBigraphon]:
        w = StepBigraphon(mu, nu, values)
        return density(g, w) - edge_density(w) ** e, w

    best_gap = math.inf
    best_kernel = None
    initial_gap = None
    for _ in range(max(1, restarts)):
        values = rng.uniform(0.0, 1.0, (m, n))
        gap, w = gap_of(values)
        if initial_gap is None:
            initial_gap = gap
        if gap < best_gap:
            best_gap, best_kernel = gap, w
        for _ in range(steps):
            t_edge = edge_density(w)
            grad = density_gradient(g, w) - e * t_edge ** (e - 1) * weight
            values = np.maximum(values - learning_rate * grad, 0.0)
            gap, w = gap_of(values)
            if gap < best_gap:
                best_gap, best_kernel = gap, w
    report = sidorenko_gap(g, best_kernel)
    return CounterexampleSearchResult(
        best=report,
        best_kernel=best_kernel,
        initial_gap=initial_gap,
        restarts=restarts,
        steps=steps,
    )


def tensor_power_check(
    lhs: list[tuple[Bigraph, float]],
    rhs: list[tuple[Bigraph, float]],
    c: float,
    w: StepBigraphon,
    k_max: int,
) -> dict:
    """Check the multiplicativity of densities under tensor powers and report
    the amplification trajectory c**(1/k) -> 1.

    For every involved bigraph and k <= k_max the identity
    t(G, W**k) = t(G, W)**k is verified; if the product inequality
    prod t(G_i, W)**r_i >= c * prod t(H_j, W)**s_j holds at k = 1, evaluating
    it on tensor powers weakens the constant to c**(1/k), and the report
    records that amplified inequality at every k.
    """
    if k_max < 1:
        raise PreconditionError(f"k_max must be >= 1, got {k_max}")
    if c <= 0:
        raise PreconditionError(f"c must be positive, got {c}")
    if any(r < 0 for _, r in lhs) or any(s < 0 for _, s in rhs):
        raise PreconditionError("exponents must be nonnegative")

    graphs = [g for g, _ in lhs] + [g for g, _ in rhs]
    base = {id(g): density(g, w) for g in graphs}
    lhs_value = math.prod(base[id(g)] ** r for g, r in lhs)
    rhs_value = math.prod(base[id(g)] ** s for g, s in rhs)

    identity_max = 0.0
    trajectory = []
    for k in range(1, k_max + 1):
        wk = tensor_power(w, k)
        for g in graphs:
            got = density(g, wk)
            want = base[id(g)] ** k
            identity_max = max(
                identity_max, abs(got - want) / max(abs(want), 1e-300)
            )
        amplified = c ** (1.0 / k)
        trajectory.append(
            {
                "k": k,
                "amplified_constant": amplified,
                "lhs": lhs_value,
                "rhs_scaled": amplified * rhs_value,
                "holds": lhs_value >= amplified * rhs_value * (1 - 1e-9),
            }
        )
    return {
        "identity_max_residual": identity_max,
        "base_holds": lhs_value >= c * rhs_value * (1 - 1e-9),
        "trajectory": trajectory,
    }
