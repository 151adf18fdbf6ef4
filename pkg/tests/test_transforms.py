import math

import numpy as np
import pytest

from bigraphon import (
    CHECK_RTOL,
    Flag,
    PreconditionError,
    StepBigraphon,
    biregularity_defect,
    biregularize,
    book,
    complete_bipartite,
    constant_kernel,
    density,
    dual_kernel,
    edge,
    edge_density,
    even_cycle,
    flag_density,
    flag_regularize,
    left_degrees,
    left_edge_flag,
    left_star_flag,
    lower_regularize,
    path,
    right_degrees,
    select_trim_alpha,
    star,
    star_lower_regularize,
    stars_pipeline,
    symmetric_flag_regularize,
    trim_mass_floor,
    trim_step_bound,
    uniform_kernel,
)
from conftest import random_kernel, random_symmetric_kernel, rel_err

# Left 1-flags with a left d-regular underlying bigraph, per degree.
FLAG_CHOICES = {
    1: [left_edge_flag()],
    2: [left_star_flag(2), Flag(even_cycle(4), ("L0",))],
    3: [left_star_flag(3), Flag(complete_bipartite(3, 3), ("L0",))],
}


def eq9_holds(w):
    return max(left_degrees(w).max(), right_degrees(w).max()) <= 2 * edge_density(w)


def kernel_with_weak_rows(rng, m, n):
    values = rng.uniform(0.5, 1.0, (m, n))
    weak = rng.integers(0, m)
    values[weak] *= rng.uniform(0.001, 0.05)
    return StepBigraphon(np.full(m, 1.0 / m), np.full(n, 1.0 / n), values)


class TestFlagRegularize:
    def test_constant_is_fixed_point(self):
        w = constant_kernel(0.5, 3, 2)
        for d, flags in FLAG_CHOICES.items():
            for f in flags:
                if f.underlying.v2 > 0:
                    w2, rep = flag_regularize(w, f, d, 1.0)
                    assert np.allclose(w2.values, w.values, rtol=1e-15)
                    assert np.allclose(w2.mu, w.mu, rtol=1e-15)
                    assert rep.worst_residual() >= -CHECK_RTOL

    def test_zero_density_returns_input(self):
        w = uniform_kernel([[0.0, 0.0], [0.0, 0.0]])
        w2, rep = flag_regularize(w, left_edge_flag(), 1, 1.0)
        assert w2 is w
        assert rep.Z == 0.0

    def test_all_items_hold_on_random_instances(self, rng):
        for trial in range(60):
            d = (1, 2, 3)[trial % 3]
            eps = (0.125, 1.0, 4.0)[(trial // 3) % 3]
            f = FLAG_CHOICES[d][trial % len(FLAG_CHOICES[d])]
            m, n = rng.integers(2, 6), rng.integers(2, 6)
            w = random_kernel(rng, int(m), int(n))
            _, rep = flag_regularize(w, f, d, eps)
            assert rep.worst_residual() >= -CHECK_RTOL, (
                d, eps, min(rep.item_residuals, key=rep.item_residuals.get))

    def test_degree_one_case_covers_all_graphs(self, rng):
        w = random_kernel(rng, 3, 3)
        _, rep = flag_regularize(w, left_edge_flag(), 1, 1.0)
        all_graph_keys = [k for k in rep.item_residuals if k.startswith("all_graphs_upper_bound")]
        assert "all_graphs_upper_bound[edge_plus_isolated]" in all_graph_keys
        assert all(rep.item_residuals[k] >= -CHECK_RTOL for k in all_graph_keys)

    def test_right_flag_densities_pointwise_unchanged(self, rng):
        w = random_kernel(rng, 4, 3)
        w2, _ = flag_regularize(w, left_edge_flag(), 1, 1.0)
        probe = Flag(star(1), ("R0",))
        before = flag_density(probe, w).values
        after = flag_density(probe, w2).values
        assert np.allclose(before, after, rtol=1e-12)

    def test_regular_graph_densities_unchanged(self, rng):
        w = random_kernel(rng, 3, 3)
        w2, _ = flag_regularize(w, left_edge_flag(), 1, 1.0)
        for g in (edge(), path(3)):
            assert rel_err(density(g, w2), density(g, w)) < 1e-12

    def test_flag_density_capped(self, rng):
        for eps in (0.125, 1.0):
            w = random_kernel(rng, 4, 4)
            w2, _ = flag_regularize(w, left_star_flag(2), 2, eps)
            table = flag_density(left_star_flag(2), w2)
            bound = (1 + eps) * density(star(2), w2)
            assert table.max <= bound * (1 + 1e-12)

    def test_preconditions(self, rng):
        w = random_kernel(rng, 2, 2)
        with pytest.raises(PreconditionError):
            flag_regularize(w, Flag(star(2), ("R0",)), 1, 1.0)  # right label
        with pytest.raises(PreconditionError):
            flag_regularize(w, Flag(book(2), ("L0",)), 2, 1.0)  # not left regular
        with pytest.raises(PreconditionError):
            flag_regularize(w, left_edge_flag(), 1, 0.0)

    def test_report_z_consistency_enforced(self, rng):
        w = random_kernel(rng, 3, 3)
        _, rep = flag_regularize(w, left_edge_flag(), 1, 1.0)
        assert abs(rep.Z - float(np.dot(rep.input_summary["mu"], rep.f_values))) <= 1e-12 * rep.Z


class TestLowerRegularize:
    def test_mass_floor_limit_value(self):
        assert abs(trim_mass_floor(1e-6) - math.sqrt(2) / 8) <= 1e-4

    def test_alpha_grid_selection(self, rng):
        w = random_kernel(rng, 3, 3, low=0.2)
        alpha = select_trim_alpha(w)
        assert alpha in {2.0 ** -k for k in range(3, 41)}
        assert trim_mass_floor(alpha) >= 0.125
        assert 0.1 - alpha * w.sup_norm / edge_density(w) >= 0.0625

    def test_no_trimming_when_degrees_high(self, rng):
        w = random_kernel(rng, 3, 3, low=0.5, high=1.0)
        assert min(left_degrees(w).min(), right_degrees(w).min()) >= edge_density(w) / 10
        w2, trace = lower_regularize(w)
        assert trace.i0 == 0
        assert np.array_equal(w2.values, w.values)

    def test_items_on_random_instances(self, rng):
        trimmed_runs = 0
        for trial in range(40):
            if trial % 2 == 0:
                w = random_kernel(rng, 4, 4, low=0.3)
            else:
                w = kernel_with_weak_rows(rng, int(rng.integers(4, 6)), int(rng.integers(4, 6)))
            if not eq9_holds(w):
                continue
            w2, trace = lower_regularize(w)
            trimmed_runs += trace.i0 > 0
            assert trace.worst_residual() >= -CHECK_RTOL
            assert trace.i0 <= trim_step_bound(trace.alpha)
            assert rel_err(edge_density(w2), edge_density(w)) < 1e-12
            t2 = edge_density(w2)
            assert min(left_degrees(w2).min(), right_degrees(w2).min()) >= 2 ** -10 * t2 - 1e-9
        assert trimmed_runs >= 5

    def test_edge_density_monotone_along_steps(self, rng):
        for _ in range(10):
            w = kernel_with_weak_rows(rng, 5, 5)
            if not eq9_holds(w):
                continue
            _, trace = lower_regularize(w)
            densities = [s["edge_density_after"] for s in trace.steps]
            t0 = edge_density(w)
            for t in densities:
                assert t >= t0 * (1 - 1e-12)
            assert densities == sorted(densities)

    def test_precondition_rejected(self):
        w = uniform_kernel([[9.0, 9.0], [0.0, 0.0], [0.0, 0.0]])
        with pytest.raises(PreconditionError):
            lower_regularize(w)

    def test_zero_kernel_unchanged(self):
        w = uniform_kernel([[0.0, 0.0], [0.0, 0.0]])
        w2, trace = lower_regularize(w)
        assert w2 is w and trace.i0 == 0


class TestStarLowerRegularize:
    def test_constant_unchanged(self):
        w = constant_kernel(0.6, 3, 3)
        w2, rep = star_lower_regularize(w, 2)
        assert np.allclose(w2.values, w.values, rtol=1e-15)
        assert rep.worst_residual() >= -CHECK_RTOL

    def test_items_on_random_instances(self, rng):
        checked = 0
        for _ in range(200):
            w = random_kernel(rng, int(rng.integers(2, 6)), int(rng.integers(2, 6)))
            d = int(rng.integers(1, 4))
            table = flag_density(left_star_flag(d), w)
            if table.max > 2 * density(star(d), w):
                continue
            checked += 1
            w2, rep = star_lower_regularize(w, d)
            assert rep.worst_residual() >= -CHECK_RTOL
            assert rel_err(density(star(d), w2), density(star(d), w)) < 1e-12
            assert flag_density(left_star_flag(d), w2).min >= density(star(d), w2) / 6 - 1e-9
        assert checked >= 100

    def test_precondition_rejected(self):
        w = uniform_kernel([[1.0, 1.0], [0.0, 0.0], [0.0, 0.0]])
        with pytest.raises(PreconditionError):
            star_lower_regularize(w, 2)


class TestBiregularize:
    def test_constant_every_stage(self):
        w = constant_kernel(0.4, 2, 3)
        result = biregularize(w)
        for stage in result.stages:
            assert np.allclose(stage.values, 0.4, rtol=1e-12)
        assert result.worst_check() >= -CHECK_RTOL

    def test_random_kernels(self, rng):
        for _ in range(15):
            w = random_kernel(rng, int(rng.integers(2, 5)), int(rng.integers(2, 5)))
            result = biregularize(w)
            w5 = result.stages[-1]
            t5 = edge_density(w5)
            assert max(biregularity_defect(w5)) <= 1e-9 * t5
            assert rel_err(t5, edge_density(w)) < 1e-12
            assert result.worst_check() >= -CHECK_RTOL


class TestStarsPipeline:
    def test_constant_all_stages(self):
        result = stars_pipeline(constant_kernel(0.3, 2, 2), 2)
        for stage in result.stages:
            assert np.allclose(stage.values, 0.3, rtol=1e-12)

    def test_star_density_preserved_and_left_regular(self, rng):
        for _ in range(10):
            w = random_kernel(rng, 3, 3)
            result = stars_pipeline(w, 2)
            t_star = density(star(2), w)
            for stage in result.stages:
                assert rel_err(density(star(2), stage), t_star) < 1e-12
            w3 = result.stages[-1]
            t3 = edge_density(w3)
            assert np.abs(left_degrees(w3) - t3).max() <= 1e-9 * t3
            assert result.worst_check() >= -CHECK_RTOL

    def test_point_degree_is_root_of_star_table(self, rng):
        # t(e1)(x)**d equals the labeled-star table entry at x, so flatness of
        # the star table forces left regularity.
        w = stars_pipeline(random_kernel(rng, 3, 3), 2).stages[-1]
        table = flag_density(left_star_flag(2), w).values
        assert np.allclose(np.sqrt(table), left_degrees(w), rtol=1e-12)


class TestSymmetric:
    def test_output_symmetric(self, rng):
        for _ in range(10):
            w = random_symmetric_kernel(rng, 3)
            w2, rep = symmetric_flag_regularize(w, left_edge_flag(), 1, 1.0)
            assert np.abs(w2.values - w2.values.T).max() <= 1e-12
            assert np.array_equal(w2.mu, w2.nu)
            assert rep.worst_residual() >= -CHECK_RTOL

    def test_cycle_invariance_needs_matching_degree(self, rng):
        w = random_symmetric_kernel(rng, 3)
        w2, rep = symmetric_flag_regularize(w, Flag(even_cycle(4), ("L0",)), 2, 1.0)
        assert rel_err(density(even_cycle(4), w2), density(even_cycle(4), w)) < 1e-9
        assert rep.item_residuals["regular_invariance[cycle_4]"] >= -CHECK_RTOL

    def test_asymmetric_rejected(self, rng):
        w = random_kernel(rng, 3, 3)
        with pytest.raises(PreconditionError):
            symmetric_flag_regularize(w, left_edge_flag(), 1, 1.0)

    def test_regularity_mismatch_rejected(self, rng):
        w = random_symmetric_kernel(rng, 3)
        with pytest.raises(PreconditionError):
            symmetric_flag_regularize(w, left_star_flag(2), 2, 1.0)
