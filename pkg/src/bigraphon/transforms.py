"""Kernel rewrites that improve degree regularity while controlling densities.

Every transform returns the rewritten kernel together with an audit record
that recomputes both sides of each guaranteed inequality on the actual
output; the transforms never trust their own intermediate algebra.  Residuals
are signed slacks, normalized by the magnitude of the compared quantities,
so a residual >= -CHECK_RTOL certifies the corresponding guarantee.

The core rewrite (``flag_regularize``) takes a left 1-flag F whose underlying
bigraph G is left d-regular and a parameter eps > 0.  With

    f(x) = max(t(F, W)(x), eps * t(G, W)),    Z = integral of f,

it reweights the left measure by f/Z and scales row x of the values by
(Z / f(x))**(1/d).  This caps the F-density from above by (1+eps) * t(G, W'),
floors it by min(t(G, W'), delta(F, W)/eps), leaves right-rooted flag
densities of left d-regular graphs pointwise unchanged, moves densities of
low/high left-degree graphs by at most (1 + 1/eps)**(e/d - v1), and fixes
densities of left d-regular graphs.

``lower_regularize`` trims away low-degree mass: while one side still has a
sub-selection of relative mass exactly alpha whose point degrees fall below
a tenth of the current edge density, that mass is removed (atoms are split
fractionally, lowest point degree first); afterwards the surviving
above-threshold parts are kept and the kernel rescaled to restore the edge
density.  ``biregularize`` chains five rewrites into a biregular kernel with
controlled density loss; ``stars_pipeline`` is the one-sided analogue driven
by the labeled star flag, and ``symmetric_flag_regularize`` the symmetric
variant acting on both coordinates at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bigraph import (
    Bigraph,
    Flag,
    book,
    complete_bipartite,
    degree_profile,
    dual,
    edge,
    even_cycle,
    left_edge_flag,
    left_star_flag,
    path,
    star,
)
from .errors import PreconditionError
from .stepfn import (
    CHECK_RTOL,
    IDENTITY_RTOL,
    StepBigraphon,
    biregularity_defect,
    density,
    dual_kernel,
    edge_density,
    flag_density,
    left_degrees,
    restrict,
    right_degrees,
    scale,
)

__all__ = [
    "TransformReport",
    "TrimTrace",
    "PipelineResult",
    "flag_regularize",
    "lower_regularize",
    "star_lower_regularize",
    "biregularize",
    "stars_pipeline",
    "symmetric_flag_regularize",
    "trim_mass_floor",
    "trim_step_bound",
    "select_trim_alpha",
    "default_check_graphs",
]

_TINY = 1e-300


def _slack_le(lhs: float, rhs: float) -> float:
    """Normalized signed slack of the inequality lhs <= rhs."""
    return (rhs - lhs) / max(abs(lhs), abs(rhs), _TINY)


def _slack_eq(a: float, b: float) -> float:
    """Normalized slack of the equality a == b (always <= 0)."""
    return -abs(a - b) / max(abs(a), abs(b), _TINY)


def default_check_graphs() -> list[tuple[str, Bigraph]]:
    """Small named bigraphs used to audit transform guarantees."""
    return [
        ("edge", edge()),
        ("star_2", star(2)),
        ("star_3", star(3)),
        ("path_3", path(3)),
        ("path_4", path(4)),
        ("cycle_4", even_cycle(4)),
        ("cycle_6", even_cycle(6)),
        ("book_2", book(2)),
        ("complete_2_3", complete_bipartite(2, 3)),
        ("complete_3_3", complete_bipartite(3, 3)),
        (
            "edge_plus_isolated",
            Bigraph(("L0", "L1"), ("R0",), {("L0", "R0")}),
        ),
    ]


@dataclass(eq=False)
class TransformReport:
    """Audit record for one kernel rewrite.

    ``f_values`` is the per-left-part reweighting function and ``Z`` its
    integral against the input left measure (validated on construction).
    ``item_residuals`` maps each audited guarantee to its worst normalized
    slack; all residuals >= -CHECK_RTOL means the rewrite behaved as
    guaranteed.
    """

    input_summary: dict
    output_summary: dict
    epsilon: float | None
    d: int
    Z: float
    f_values: tuple[float, ...]
    item_residuals: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.f_values = tuple(float(x) for x in self.f_values)
        mu = self.input_summary.get("mu")
        if mu is not None:
            z = float(np.dot(mu, self.f_values))
            if abs(z - self.Z) > IDENTITY_RTOL * max(abs(self.Z), 1.0):
                raise ValueError(f"Z={self.Z!r} inconsistent with sum(mu*f)={z!r}")

    def worst_residual(self) -> float:
        return min(self.item_residuals.values()) if self.item_residuals else 0.0

    def to_obj(self) -> dict:
        return {
            "input_summary": self.input_summary,
            "output_summary": self.output_summary,
            "epsilon": self.epsilon,
            "d": self.d,
            "Z": self.Z,
            "f_values": list(self.f_values),
            "item_residuals": dict(self.item_residuals),
        }


@dataclass(eq=False)
class TrimTrace:
    """Audit record of a low-degree trimming run.

    ``steps`` holds one entry per removal round: the side trimmed, the
    (part index, removed mass) pairs, and the edge density of the remaining
    restriction.  ``final_selection`` gives the surviving absolute masses per
    original part on each side.
    """

    alpha: float
    steps: tuple[dict, ...]
    i0: int
    M_alpha: float
    final_selection: tuple[tuple[float, ...], tuple[float, ...]]
    item_residuals: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.steps = tuple(self.steps)
        if self.i0 != len(self.steps):
            raise ValueError("i0 must equal the number of recorded steps")
        bound = trim_step_bound(self.alpha)
        if self.i0 > bound * (1 + 1e-12):
            raise ValueError(f"i0={self.i0} exceeds the step bound {bound}")
        last = -math.inf
        for step in self.steps:
            t = step["edge_density_after"]
            if t < last * (1 - 1e-12):
                raise ValueError("edge density decreased along trimming steps")
            last = t

    def worst_residual(self) -> float:
        return min(self.item_residuals.values()) if self.item_residuals else 0.0

    def to_obj(self) -> dict:
        return {
            "alpha": self.alpha,
            "steps": [dict(s) for s in self.steps],
            "i0": self.i0,
            "M_alpha": self.M_alpha,
            "final_selection": {
                "left_masses": list(self.final_selection[0]),
                "right_masses": list(self.final_selection[1]),
            },
            "item_residuals": dict(self.item_residuals),
        }


@dataclass(eq=False)
class PipelineResult:
    stages: tuple[StepBigraphon, ...]
    reports: tuple
    checks: dict[str, float]

    def worst_check(self) -> float:
        return min(self.checks.values()) if self.checks else 0.0

    def to_obj(self) -> dict:
        from .serialize import kernel_to_obj

        return {
            "stages": [kernel_to_obj(w) for w in self.stages],
            "reports": [r.to_obj() for r in self.reports],
            "checks": dict(self.checks),
        }


def _kernel_summary(w: StepBigraphon, flag: Flag | None = None) -> dict:
    out = {
        "parts": [w.m, w.n],
        "mu": w.mu.tolist(),
        "edge_density": edge_density(w),
        "sup_norm": w.sup_norm,
    }
    if flag is not None:
        table = flag_density(flag, w)
        out["flag_density_min"] = table.min
        out["flag_density_max"] = table.max
        out["flag_graph_density"] = density(flag.underlying, w)
    return out


def _require_left_one_flag(f: Flag) -> None:
    if f.k != 1 or f.underlying.side(f.labels[0]) != 1:
        raise PreconditionError("flag must carry exactly one label, on a left vertex")


def _require_left_regular(g: Bigraph, d: int) -> None:
    prof = degree_profile(g)
    if prof.left_regular_degree != d:
        raise PreconditionError(
            f"underlying bigraph must be left {d}-regular, got degrees "
            f"[{prof.delta1}, {prof.Delta1}]"
        )


def _right_probe_flag(d: int) -> Flag:
    """Right 1-flag whose underlying bigraph is left d-regular: the d-star
    with one leaf labeled."""
    return Flag(star(d), ("R0",))


def _flag_regularize_report(
    w_in: StepBigraphon,
    w_out: StepBigraphon,
    f: Flag,
    d: int,
    epsilon: float,
    f_values: np.ndarray,
    z: float,
    check_graphs,
) -> TransformReport:
    g = f.underlying
    t_g_out = density(g, w_out)
    table_in = flag_density(f, w_in)
    table_out = flag_density(f, w_out)
    res: dict[str, float] = {}
    res["max_flag_density_bound"] = _slack_le(table_out.max, (1 + epsilon) * t_g_out)
    res["min_flag_density_bound"] = _slack_le(
        min(t_g_out, table_in.min / epsilon), table_out.min
    )

    probe = _right_probe_flag(d)
    probe_in = flag_density(probe, w_in).values
    probe_out = flag_density(probe, w_out).values
    res["right_flag_invariance"] = float(
        min(_slack_eq(a, b) for a, b in zip(probe_in.ravel(), probe_out.ravel()))
    )

    for name, h in check_graphs:
        prof = degree_profile(h)
        factor = (1 + 1 / epsilon) ** (h.e / d - h.v1)
        t_in = density(h, w_in)
        t_out = density(h, w_out)
        if prof.Delta1 <= d:
            res[f"low_degree_lower_bound[{name}]"] = _slack_le(factor * t_in, t_out)
        if prof.delta1 >= d:
            res[f"high_degree_upper_bound[{name}]"] = _slack_le(t_out, factor * t_in)
        if prof.left_regular_degree == d:
            res[f"regular_invariance[{name}]"] = _slack_eq(t_out, t_in)
        if d == 1:
            # With d=1 the upper bound extends to every bigraph: isolated
            # left vertices change neither side of the inequality, and
            # (1 + 1/eps)**e dominates (1 + 1/eps)**(e - v1).
            res[f"all_graphs_upper_bound[{name}]"] = _slack_le(
                t_out, (1 + 1 / epsilon) ** h.e * t_in
            )

    return TransformReport(
        input_summary=_kernel_summary(w_in, f),
        output_summary=_kernel_summary(w_out, f),
        epsilon=epsilon,
        d=d,
        Z=z,
        f_values=tuple(f_values.tolist()),
        item_residuals=res,
    )


def flag_regularize(
    w: StepBigraphon,
    f: Flag,
    d: int,
    epsilon: float,
    check_graphs=None,
) -> tuple[StepBigraphon, TransformReport]:
    """Reweight the left side of w so the density table of f flattens to
    within a (1+epsilon) band around the density of its underlying bigraph.

    Requires f to be a left 1-flag with a left d-regular underlying bigraph
    and epsilon > 0.  A kernel with zero underlying-graph density is returned
    unchanged.  With d=1 and the left-rooted edge flag this is the edge-degree
    regularization step whose upper-bound guarantee holds for all bigraphs.
    """
    _require_left_one_flag(f)
    _require_left_regular(f.underlying, d)
    if epsilon <= 0:
        raise PreconditionError(f"epsilon must be positive, got {epsilon}")
    if check_graphs is None:
        check_graphs = default_check_graphs()

    t_g = density(f.underlying, w)
    if t_g == 0.0:
        f_values = flag_density(f, w).values
        report = _flag_regularize_report(w, w, f, d, epsilon, f_values, 0.0, check_graphs)
        return w, report

    f_values = np.maximum(flag_density(f, w).values, epsilon * t_g)
    z = float(w.mu @ f_values)
    mu2 = w.mu * f_values / z
    values2 = (z / f_values)[:, None] ** (1.0 / d) * w.values
    w2 = StepBigraphon(mu2, w.nu, values2)
    report = _flag_regularize_report(w, w2, f, d, epsilon, f_values, z, check_graphs)
    return w2, report


def trim_step_bound(alpha: float) -> float:
    """Upper bound on the number of trimming rounds, a function of alpha only."""
    return 1.0 / (math.log2(1 - alpha / 10) - math.log2(math.sqrt(1 - alpha)))


def trim_mass_floor(alpha: float) -> float:
    """Guaranteed lower bound on the surviving mass of either side after
    trimming with parameter alpha; tends to sqrt(2)/8 as alpha -> 0."""
    return (1 - alpha) ** (1 + trim_step_bound(alpha))


def select_trim_alpha(w: StepBigraphon) -> float:
    """Largest alpha on the grid 2**-k, k = 3..40, with mass floor >= 1/8 and
    1/10 - alpha * sup(W) / edge_density(W) >= 1/16.

    Larger alpha means fewer, coarser trimming rounds; any small enough value
    works, so the scan prefers the coarsest feasible one.
    """
    t = edge_density(w)
    if t <= 0:
        raise PreconditionError("alpha selection needs positive edge density")
    for k in range(3, 41):
        alpha = 2.0 ** -k
        if trim_mass_floor(alpha) >= 0.125 and 0.1 - alpha * w.sup_norm / t >= 0.0625:
            return alpha
    raise PreconditionError(
        "no feasible trimming fraction on the 2**-k grid (k <= 40); "
        "the kernel is too unbalanced"
    )


def _sub_threshold_removal(
    masses: np.ndarray, degrees: np.ndarray, threshold: float, amount: float
) -> list[tuple[int, float]]:
    """Remove `amount` of absolute mass from the parts whose degree is strictly
    below threshold, lowest degree first (ties by part index); the boundary
    part is split fractionally.  Returns the (index, removed mass) list."""
    below = [i for i in np.argsort(degrees, kind="stable") if degrees[i] < threshold]
    removed = []
    remaining = amount
    for i in below:
        if remaining <= 0:
            break
        take = min(float(masses[i]), remaining)
        if take > 0:
            masses[i] -= take
            removed.append((int(i), take))
            remaining -= take
    return removed


def lower_regularize(
    w: StepBigraphon, alpha: float | None = None, check_graphs=None
) -> tuple[StepBigraphon, TrimTrace]:
    """Trim low-degree mass until both sides' point degrees clear a tenth of
    the edge density, then restore the edge density by scaling.

    Requires max of the two maximal point degrees <= 2 * edge density (within
    CHECK_RTOL).  A kernel with zero edge density is returned unchanged.  The
    output satisfies: edge density preserved; minimal point degrees on both
    sides >= 2**-10 times the edge density; and the density of any bigraph G
    grows by at most 2**(3 v(G) + e(G)).
    """
    if check_graphs is None:
        check_graphs = default_check_graphs()
    t0 = edge_density(w)
    if t0 == 0.0:
        trace = TrimTrace(
            alpha=alpha if alpha is not None else 0.5,
            steps=(),
            i0=0,
            M_alpha=trim_mass_floor(alpha) if alpha is not None else 0.0,
            final_selection=(tuple(w.mu.tolist()), tuple(w.nu.tolist())),
        )
        return w, trace

    d_max = max(float(left_degrees(w).max()), float(right_degrees(w).max()))
    if d_max > 2 * t0 * (1 + CHECK_RTOL):
        raise PreconditionError(
            "trimming requires both maximal point degrees to be at most twice "
            f"the edge density: max degree {d_max}, edge density {t0}"
        )
    if alpha is None:
        alpha = select_trim_alpha(w)
    if not 0 < alpha < 1:
        raise PreconditionError(f"alpha must lie in (0, 1), got {alpha}")

    xm = w.mu.copy()
    ym = w.nu.copy()
    steps: list[dict] = []
    max_rounds = int(math.ceil(trim_step_bound(alpha))) + 5

    def current():
        return restrict(w, xm, ym)

    while True:
        cur = current()
        keep_l = np.nonzero(xm > 0)[0]
        keep_r = np.nonzero(ym > 0)[0]
        deg_l = np.full(w.m, math.inf)
        deg_r = np.full(w.n, math.inf)
        deg_l[keep_l] = left_degrees(cur)
        deg_r[keep_r] = right_degrees(cur)
        t_cur = edge_density(cur)
        threshold = t_cur / 10
        mass_l = float(xm[deg_l < threshold].sum()) / float(xm.sum())
        mass_r = float(ym[deg_r < threshold].sum()) / float(ym.sum())
        if mass_l >= alpha:
            removed = _sub_threshold_removal(xm, deg_l, threshold, alpha * float(xm.sum()))
            side = "left"
        elif mass_r >= alpha:
            removed = _sub_threshold_removal(ym, deg_r, threshold, alpha * float(ym.sum()))
            side = "right"
        else:
            break
        steps.append(
            {
                "side": side,
                "removed": [[i, m] for i, m in removed],
                "edge_density_after": edge_density(current()),
            }
        )
        if len(steps) > max_rounds:
            raise RuntimeError("trimming failed to terminate within its round bound")

    cur = current()
    keep_l = np.nonzero(xm > 0)[0]
    keep_r = np.nonzero(ym > 0)[0]
    deg_l = np.full(w.m, -math.inf)
    deg_r = np.full(w.n, -math.inf)
    deg_l[keep_l] = left_degrees(cur)
    deg_r[keep_r] = right_degrees(cur)
    t_stop = edge_density(cur)
    surviving_mass = (float(xm.sum()), float(ym.sum()))
    # Parts meeting the threshold (boundary equality stays) survive; the
    # sub-threshold leftovers, of relative mass < alpha per side, are dropped.
    xm_final = np.where(deg_l >= t_stop / 10, xm, 0.0)
    ym_final = np.where(deg_r >= t_stop / 10, ym, 0.0)
    if np.array_equal(xm_final, w.mu) and np.array_equal(ym_final, w.nu):
        w2 = w
    else:
        w_hat = restrict(w, xm_final, ym_final)
        w2 = scale(w_hat, t0 / edge_density(w_hat))

    res: dict[str, float] = {}
    t2 = edge_density(w2)
    res["edge_density_preserved"] = _slack_eq(t2, t0)
    res["min_degree_floor"] = _slack_le(
        2.0 ** -10 * t2, min(float(left_degrees(w2).min()), float(right_degrees(w2).min()))
    )
    for name, h in check_graphs:
        res[f"density_growth_bound[{name}]"] = _slack_le(
            density(h, w2), 2.0 ** (3 * h.v + h.e) * density(h, w)
        )
    i0 = len(steps)
    res["surviving_mass_floor"] = min(
        _slack_le((1 - alpha) ** i0, surviving_mass[0]),
        _slack_le((1 - alpha) ** i0, surviving_mass[1]),
    )

    trace = TrimTrace(
        alpha=alpha,
        steps=tuple(steps),
        i0=i0,
        M_alpha=trim_mass_floor(alpha),
        final_selection=(tuple(xm_final.tolist()), tuple(ym_final.tolist())),
        item_residuals=res,
    )
    return w2, trace


def star_lower_regularize(
    w: StepBigraphon, d: int, check_graphs=None
) -> tuple[StepBigraphon, TransformReport]:
    """Restrict to the left parts whose labeled-star density reaches half the
    star density, then rescale so the star density is restored.

    Requires the maximal labeled-star density to be at most twice the star
    density (within CHECK_RTOL); then the retained mass is at least 1/3, the
    output's labeled-star density is floored by a sixth of its star density,
    and any bigraph's density grows by at most 3**v1.
    """
    if d < 1:
        raise PreconditionError(f"d must be >= 1, got {d}")
    if check_graphs is None:
        check_graphs = default_check_graphs()
    flag = left_star_flag(d)
    g_star = star(d)
    t_star = density(g_star, w)
    table = flag_density(flag, w).values
    if t_star == 0.0:
        report = TransformReport(
            input_summary=_kernel_summary(w, flag),
            output_summary=_kernel_summary(w, flag),
            epsilon=None,
            d=d,
            Z=t_star,
            f_values=tuple(table.tolist()),
            item_residuals={},
        )
        return w, report
    if float(table.max()) > 2 * t_star * (1 + CHECK_RTOL):
        raise PreconditionError(
            "star trimming requires the maximal labeled-star density to be at "
            f"most twice the star density: max {table.max()}, density {t_star}"
        )

    keep = table >= t_star / 2
    w_hat = restrict(w, np.where(keep, w.mu, 0.0), None)
    w2 = scale(w_hat, (t_star / density(g_star, w_hat)) ** (1.0 / d))

    res: dict[str, float] = {}
    t_star2 = density(g_star, w2)
    res["star_density_preserved"] = _slack_eq(t_star2, t_star)
    table2 = flag_density(flag, w2)
    res["min_star_flag_floor"] = _slack_le(t_star2 / 6, table2.min)
    res["retained_mass"] = _slack_le(1.0 / 3.0, float(w.mu[keep].sum()))
    for name, h in check_graphs:
        res[f"density_growth_bound[{name}]"] = _slack_le(
            density(h, w2), 3.0 ** h.v1 * density(h, w)
        )

    report = TransformReport(
        input_summary=_kernel_summary(w, flag),
        output_summary=_kernel_summary(w2, flag),
        epsilon=None,
        d=d,
        Z=float(w.mu @ table),
        f_values=tuple(table.tolist()),
        item_residuals=res,
    )
    return w2, report


def biregularize(w: StepBigraphon, check_graphs=None) -> PipelineResult:
    """Five-stage rewrite of w into a biregular kernel with the same edge
    density: cap left degrees, cap right degrees, trim low-degree mass, then
    pin left and right degrees with a tight reweighting.

    The density of any test bigraph G in w is bounded below by
    1025**(-2 e) * 2**(-3 v - 3 e) times its density in the final stage.
    """
    if check_graphs is None:
        check_graphs = default_check_graphs()
    e1 = left_edge_flag()
    w1, r1 = flag_regularize(w, e1, 1, 1.0, check_graphs)
    w2d, r2 = flag_regularize(dual_kernel(w1), e1, 1, 1.0, check_graphs)
    w2 = dual_kernel(w2d)
    w3, r3 = lower_regularize(w2, check_graphs=check_graphs)
    w4, r4 = flag_regularize(w3, e1, 1, 2.0 ** -10, check_graphs)
    w5d, r5 = flag_regularize(dual_kernel(w4), e1, 1, 2.0 ** -10, check_graphs)
    w5 = dual_kernel(w5d)

    t0, t5 = edge_density(w), edge_density(w5)
    defect = max(biregularity_defect(w5))
    checks: dict[str, float] = {
        "edge_density_preserved": _slack_eq(t5, t0),
        "biregularity_defect": _slack_le(defect, CHECK_RTOL * t5) if t5 > 0 else 0.0,
    }
    for name, h in check_graphs:
        c = 1025.0 ** (-2 * h.e) * 2.0 ** (-3 * h.v - 3 * h.e)
        checks[f"density_chain_bound[{name}]"] = _slack_le(c * density(h, w5), density(h, w))
    return PipelineResult(
        stages=(w1, w2, w3, w4, w5),
        reports=(r1, r2, r3, r4, r5),
        checks=checks,
    )


def stars_pipeline(w: StepBigraphon, d: int, check_graphs=None) -> PipelineResult:
    """Three-stage one-sided rewrite preserving the d-star density at every
    stage and ending left regular: cap the labeled-star density, trim the
    left parts where it is small, then pin it.

    For any test bigraph G with minimal left degree >= d, the density chain
    constant 2**(v1 - e/d) * 3**(-v1) * 7**(v1 - e/d) is audited.
    """
    if d < 1:
        raise PreconditionError(f"d must be >= 1, got {d}")
    if check_graphs is None:
        check_graphs = default_check_graphs()
    flag = left_star_flag(d)
    g_star = star(d)
    w1, r1 = flag_regularize(w, flag, d, 1.0, check_graphs)
    w2, r2 = star_lower_regularize(w1, d, check_graphs)
    w3, r3 = flag_regularize(w2, flag, d, 1.0 / 6.0, check_graphs)

    t_star = density(g_star, w)
    checks: dict[str, float] = {}
    for i, wi in enumerate((w1, w2, w3), start=1):
        checks[f"star_density_preserved[stage_{i}]"] = _slack_eq(density(g_star, wi), t_star)
    t3 = edge_density(w3)
    left_defect = float(np.abs(left_degrees(w3) - t3).max())
    checks["left_regularity_defect"] = (
        _slack_le(left_defect, CHECK_RTOL * t3) if t3 > 0 else 0.0
    )
    for name, h in check_graphs:
        if degree_profile(h).delta1 >= d:
            c = 2.0 ** (h.v1 - h.e / d) * 3.0 ** -h.v1 * 7.0 ** (h.v1 - h.e / d)
            checks[f"density_chain_bound[{name}]"] = _slack_le(
                c * density(h, w3), density(h, w)
            )
    return PipelineResult(stages=(w1, w2, w3), reports=(r1, r2, r3), checks=checks)


def _require_symmetric(w: StepBigraphon) -> None:
    if w.m != w.n or not np.allclose(w.mu, w.nu, rtol=0, atol=IDENTITY_RTOL):
        raise PreconditionError("kernel must have identical part measures on both sides")
    if float(np.abs(w.values - w.values.T).max()) > IDENTITY_RTOL * max(w.sup_norm, 1.0):
        raise PreconditionError("kernel values must be symmetric")


def symmetric_flag_regularize(
    w: StepBigraphon,
    f: Flag,
    d: int,
    epsilon: float,
    check_graphs=None,
) -> tuple[StepBigraphon, TransformReport]:
    """Symmetric analogue of ``flag_regularize``: both coordinates are
    reweighted by the same function and the value at (x, y) is scaled by
    (Z**2 / (f(x) f(y)))**(1/d), which keeps the kernel symmetric.

    Requires a symmetric kernel and a left 1-flag whose underlying bigraph is
    both left and right d-regular.  Density bounds carry the exponent
    2 e(G')/d - v(G'), conditioned on both-side degree bounds, and densities
    of graphs that are both left and right d-regular are unchanged.
    """
    _require_symmetric(w)
    _require_left_one_flag(f)
    prof = degree_profile(f.underlying)
    if prof.left_regular_degree != d or prof.right_regular_degree != d:
        raise PreconditionError(
            "underlying bigraph must be both left and right "
            f"{d}-regular, got degree profile {prof}"
        )
    if epsilon <= 0:
        raise PreconditionError(f"epsilon must be positive, got {epsilon}")
    if check_graphs is None:
        check_graphs = default_check_graphs()

    t_g = density(f.underlying, w)
    if t_g == 0.0:
        f_values = flag_density(f, w).values
        report = _symmetric_report(w, w, f, d, epsilon, f_values, 0.0, check_graphs)
        return w, report

    f_values = np.maximum(flag_density(f, w).values, epsilon * t_g)
    z = float(w.mu @ f_values)
    mu2 = w.mu * f_values / z
    values2 = (z * z / np.outer(f_values, f_values)) ** (1.0 / d) * w.values
    w2 = StepBigraphon(mu2, mu2, values2)
    report = _symmetric_report(w, w2, f, d, epsilon, f_values, z, check_graphs)
    return w2, report


def _symmetric_report(
    w_in: StepBigraphon,
    w_out: StepBigraphon,
    f: Flag,
    d: int,
    epsilon: float,
    f_values: np.ndarray,
    z: float,
    check_graphs,
) -> TransformReport:
    g = f.underlying
    t_g_out = density(g, w_out)
    table_in = flag_density(f, w_in)
    table_out = flag_density(f, w_out)
    res: dict[str, float] = {
        "symmetry": -float(np.abs(w_out.values - w_out.values.T).max())
        / max(w_out.sup_norm, 1.0),
        "max_flag_density_bound": _slack_le(table_out.max, (1 + epsilon) * t_g_out),
        "min_flag_density_bound": _slack_le(
            min(t_g_out, table_in.min / epsilon), table_out.min
        ),
    }
    for name, h in check_graphs:
        prof = degree_profile(h)
        factor = (1 + 1 / epsilon) ** (2 * h.e / d - h.v)
        t_in = density(h, w_in)
        t_out = density(h, w_out)
        if max(prof.Delta1, prof.Delta2) <= d:
            res[f"low_degree_lower_bound[{name}]"] = _slack_le(factor * t_in, t_out)
        if min(prof.delta1, prof.delta2) >= d:
            res[f"high_degree_upper_bound[{name}]"] = _slack_le(t_out, factor * t_in)
        if prof.left_regular_degree == d and prof.right_regular_degree == d:
            res[f"regular_invariance[{name}]"] = _slack_eq(t_out, t_in)
    return TransformReport(
        input_summary=_kernel_summary(w_in, f),
        output_summary=_kernel_summary(w_out, f),
        epsilon=epsilon,
        d=d,
        Z=z,
        f_values=tuple(np.asarray(f_values).tolist()),
        item_residuals=res,
    )
