import math

import numpy as np
import pytest

from bigraphon import (
    Bigraph,
    Flag,
    PreconditionError,
    StepBigraphon,
    biregularity_defect,
    book,
    complete_bipartite,
    constant_kernel,
    density,
    density_gradient,
    dual,
    dual_kernel,
    edge,
    edge_density,
    even_cycle,
    flag_density,
    left_edge_flag,
    left_star_flag,
    path,
    remove_vertex,
    restrict,
    sample_biregular,
    scale,
    star,
    tensor,
    tensor_power,
    uniform_kernel,
)
from conftest import brute_density, brute_flag_table, random_bigraph, random_kernel, rel_err

IDENTITY = uniform_kernel([[1.0, 0.0], [0.0, 1.0]])


class TestKernelType:
    def test_measures_must_sum_to_one(self):
        with pytest.raises(ValueError):
            StepBigraphon([0.5, 0.4], [0.5, 0.5], [[1, 0], [0, 1]])

    def test_measures_strictly_positive(self):
        with pytest.raises(ValueError):
            StepBigraphon([1.0, 0.0], [0.5, 0.5], [[1, 0], [0, 1]])

    def test_values_nonnegative_finite(self):
        with pytest.raises(ValueError):
            uniform_kernel([[1.0, -0.1]])
        with pytest.raises(ValueError):
            uniform_kernel([[1.0, math.inf]])

    def test_arrays_read_only(self):
        with pytest.raises(ValueError):
            IDENTITY.values[0, 0] = 2.0


class TestDensity:
    def test_constant_kernel(self):
        for g in (edge(), even_cycle(4), book(2)):
            assert rel_err(density(g, constant_kernel(0.3, 2, 3)), 0.3 ** g.e) < 1e-14

    def test_identity_kernel_frozen_values(self):
        # Direct summation over the 4 (resp. 16) cells gives 1/2 and 1/8.
        assert density(edge(), IDENTITY) == 0.5
        assert density(even_cycle(4), IDENTITY) == 0.125
        assert brute_density(edge(), IDENTITY) == 0.5
        assert brute_density(even_cycle(4), IDENTITY) == 0.125

    def test_isolated_vertices_contribute_one(self, rng):
        w = random_kernel(rng, 3, 3)
        g = Bigraph(("L0", "L1"), ("R0",), {("L0", "R0")})
        assert rel_err(density(g, w), density(edge(), w)) < 1e-14

    def test_matches_pure_python_oracle(self, rng):
        for _ in range(25):
            g = random_bigraph(rng, max_side=3)
            w = random_kernel(rng, 3, 2)
            expected = brute_density(g, w)
            assert rel_err(density(g, w, "naive"), expected) < 1e-12
            assert rel_err(density(g, w, "treedp"), expected) < 1e-12

    def test_methods_agree(self, rng):
        for _ in range(40):
            g = random_bigraph(rng, max_side=4)
            w = random_kernel(rng, 3, 3)
            assert rel_err(density(g, w, "naive"), density(g, w, "treedp")) < 1e-12

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            density(edge(), IDENTITY, "магия")

    def test_dual_symmetry_exact(self, rng):
        for _ in range(20):
            g = random_bigraph(rng, max_side=4)
            w = random_kernel(rng, 3, 2)
            assert density(g, w) == density(dual(g), dual_kernel(w))

    def test_degree_one_factorization_on_biregular(self, rng):
        w = sample_biregular(rng, 3, 3)
        for g in (path(4), star(3), path(5)):
            leaf = next(v for v in g.vertices if g.degree(v) == 1)
            lhs = density(g, w)
            rhs = density(remove_vertex(g, leaf), w) * density(edge(), w)
            assert rel_err(lhs, rhs) < 1e-12


class TestFlagDensity:
    def test_constant(self):
        t = flag_density(left_edge_flag(), constant_kernel(0.4, 3, 2))
        assert np.allclose(t.values, 0.4, rtol=1e-15)
        assert t.min == t.max

    def test_identity_kernel_entries(self):
        t1 = flag_density(left_edge_flag(), IDENTITY)
        assert t1.values[0] == 0.5
        t2 = flag_density(left_star_flag(2), IDENTITY)
        assert t2.values[0] == 0.25

    def test_matches_pure_python_oracle(self, rng):
        for _ in range(15):
            g = random_bigraph(rng, max_side=3)
            labels = g.canonical_sort([v for v in g.vertices if rng.random() < 0.4])
            f = Flag(g, labels)
            w = random_kernel(rng, 2, 3)
            got = flag_density(f, w).values
            assert np.allclose(got, brute_flag_table(f, w), rtol=1e-12, atol=0)

    def test_marginalization_recovers_density(self, rng):
        for _ in range(15):
            g = random_bigraph(rng, max_side=3)
            labels = g.canonical_sort([v for v in g.vertices if rng.random() < 0.5])
            f = Flag(g, labels)
            w = random_kernel(rng, 3, 2)
            table = flag_density(f, w).values
            for v in reversed(labels):
                weight = w.mu if g.side(v) == 1 else w.nu
                table = np.tensordot(table, weight, axes=([table.ndim - 1], [0]))
            assert rel_err(float(table), density(g, w)) < 1e-12


class TestTensor:
    def test_constant_product(self):
        t = tensor(constant_kernel(0.5, 2, 2), constant_kernel(0.25, 3, 1))
        assert np.allclose(t.values, 0.125)
        assert t.values.shape == (6, 2)

    def test_shapes(self):
        assert tensor(constant_kernel(1, 2, 3), constant_kernel(1, 2, 2)).values.shape == (4, 6)

    def test_multiplicative(self, rng):
        for g in (edge(), even_cycle(4), star(3)):
            w = random_kernel(rng, 3, 3)
            assert rel_err(density(g, tensor(w, w)), density(g, w) ** 2) < 1e-12

    def test_power_one(self, rng):
        w = random_kernel(rng, 2, 2)
        assert np.array_equal(tensor_power(w, 1).values, w.values)
        with pytest.raises(PreconditionError):
            tensor_power(w, 0)


class TestRestrict:
    def test_full_selection_unchanged(self, rng):
        w = random_kernel(rng, 3, 2)
        r = restrict(w, None, None)
        assert np.array_equal(r.values, w.values)
        assert np.allclose(r.mu, w.mu, rtol=0, atol=0)

    def test_single_row_of_identity(self):
        r = restrict(IDENTITY, [0.5, 0.0], None)
        assert r.values.shape == (1, 2)
        assert list(r.values[0]) == [1.0, 0.0]
        assert density(edge(), r) == 0.5

    def test_fractional_split(self):
        r = restrict(IDENTITY, [0.25, 0.5], None)
        assert np.allclose(r.mu, [1 / 3, 2 / 3])

    def test_zero_mass_rejected(self):
        with pytest.raises(PreconditionError):
            restrict(IDENTITY, [0.0, 0.0], None)

    def test_overweight_rejected(self):
        with pytest.raises(ValueError):
            restrict(IDENTITY, [0.7, 0.5], None)


class TestDualScale:
    def test_dual_involution(self, rng):
        w = random_kernel(rng, 3, 2)
        ww = dual_kernel(dual_kernel(w))
        assert np.array_equal(ww.values, w.values)

    def test_scale_zero(self, rng):
        w = scale(random_kernel(rng, 2, 2), 0.0)
        assert density(edge(), w) == 0.0

    def test_scale_scales_densities(self, rng):
        w = random_kernel(rng, 2, 2)
        assert rel_err(density(even_cycle(4), scale(w, 2.0)),
                       16 * density(even_cycle(4), w)) < 1e-12

    def test_negative_scale_rejected(self, rng):
        with pytest.raises(PreconditionError):
            scale(random_kernel(rng, 2, 2), -1.0)


class TestBiregularityDefect:
    def test_constant_is_biregular(self):
        assert biregularity_defect(constant_kernel(0.7, 3, 4)) == (0.0, 0.0)

    def test_identity_kernel_is_biregular(self):
        assert biregularity_defect(IDENTITY) == (0.0, 0.0)

    def test_upper_triangular_defect(self):
        w = uniform_kernel([[1.0, 1.0], [0.0, 1.0]])
        left, right = biregularity_defect(w)
        assert left == 0.25 and right == 0.25


class TestGradient:
    def test_edge_gradient(self, rng):
        w = random_kernel(rng, 3, 3)
        assert np.allclose(density_gradient(edge(), w), np.outer(w.mu, w.nu), rtol=1e-14)

    def test_constant_cycle_gradient(self):
        w = constant_kernel(0.7, 3, 3)
        expected = 4 * 0.7 ** 3 * np.outer(w.mu, w.nu)
        assert np.allclose(density_gradient(even_cycle(4), w), expected, rtol=1e-12)

    def test_against_central_differences(self, rng):
        h = 1e-6
        for g in (even_cycle(4), star(3), path(4), complete_bipartite(2, 3)):
            w = random_kernel(rng, 3, 3, low=0.1, high=1.0)
            grad = density_gradient(g, w)
            for i in range(3):
                for j in range(3):
                    up = w.values.copy()
                    dn = w.values.copy()
                    up[i, j] += h
                    dn[i, j] -= h
                    fd = (
                        density(g, StepBigraphon(w.mu, w.nu, up))
                        - density(g, StepBigraphon(w.mu, w.nu, dn))
                    ) / (2 * h)
                    assert rel_err(grad[i, j], fd) < 1e-6
