import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bigraphon import (
    Bigraph,
    Flag,
    PreconditionError,
    amalgamate,
    book,
    complete_bipartite,
    degree_profile,
    dual,
    edge,
    even_cycle,
    find_isomorphism,
    flag_power,
    induced,
    isomorphic,
    is_connected,
    left_edge_flag,
    left_star_flag,
    path,
    remove_edges,
    remove_vertex,
    right_edge_flag,
    standard,
    star,
    trees,
    two_core,
)
from conftest import peel_two_core, random_bigraph

import numpy as np


@st.composite
def small_bigraphs(draw):
    a = draw(st.integers(1, 4))
    b = draw(st.integers(1, 4))
    pairs = st.tuples(st.integers(0, a - 1), st.integers(0, b - 1))
    edges = draw(st.sets(pairs, max_size=a * b))
    return Bigraph(
        tuple(f"L{i}" for i in range(a)),
        tuple(f"R{j}" for j in range(b)),
        {(f"L{i}", f"R{j}") for i, j in edges},
    )


class TestBuilders:
    def test_edge(self):
        g = edge()
        assert (g.v1, g.v2, g.e) == (1, 1, 1)

    def test_star(self):
        g = star(3)
        assert g.v1 == 1 and g.v2 == 3
        assert g.degree("L0") == 3
        assert all(g.degree(v) == 1 for v in g.right)

    def test_book_counts(self):
        # e = 3k+1 and v = 2k+2 for every k >= 1.
        for k in range(1, 7):
            g = book(k)
            assert g.e == 3 * k + 1
            assert g.v == 2 * k + 2

    def test_book_2_example(self):
        g = book(2)
        assert (g.v, g.e) == (6, 7)
        prof = degree_profile(g)
        assert (prof.delta1, prof.Delta1, prof.delta2, prof.Delta2) == (2, 3, 2, 3)
        assert not prof.biregular

    def test_book_1_is_cycle(self):
        assert isomorphic(book(1), even_cycle(4))

    def test_path_edge_count(self):
        assert path(4).e == 3
        assert path(1).e == 0

    def test_even_cycle_regular(self):
        prof = degree_profile(even_cycle(6))
        assert prof.left_regular_degree == 2 and prof.right_regular_degree == 2

    def test_rejects_bad_parameters(self):
        with pytest.raises(PreconditionError):
            star(0)
        with pytest.raises(PreconditionError):
            book(-1)
        with pytest.raises(PreconditionError):
            even_cycle(5)
        with pytest.raises(PreconditionError):
            complete_bipartite(0, 2)

    def test_standard_dispatch(self):
        assert standard("book", 2) == book(2)
        with pytest.raises(ValueError):
            standard("nope")


class TestEdit:
    def test_dual_of_edge_isomorphic(self):
        assert isomorphic(dual(edge()), edge())

    def test_induced_star_is_edge(self):
        assert isomorphic(induced(star(3), {"L0", "R1"}), edge())

    def test_remove_leaf_of_star2(self):
        assert isomorphic(remove_vertex(star(2), "R1"), edge())

    def test_remove_edges(self):
        g = remove_edges(even_cycle(4), {("L0", "R0")})
        assert g.e == 3 and isomorphic(g, path(4))

    def test_unknown_ids_rejected(self):
        with pytest.raises(ValueError):
            remove_vertex(edge(), "Z9")
        with pytest.raises(ValueError):
            remove_edges(edge(), {("L0", "R7")})
        with pytest.raises(ValueError):
            induced(edge(), {"L0", "Q"})

    @given(small_bigraphs())
    @settings(max_examples=60, deadline=None)
    def test_dual_is_involution(self, g):
        assert dual(dual(g)) == g


class TestFlags:
    def test_amalgamate_left_edges(self):
        glued = amalgamate(left_edge_flag(), left_edge_flag())
        assert isomorphic(glued, left_star_flag(2))

    def test_amalgamate_stars(self):
        glued = amalgamate(left_star_flag(2), left_star_flag(3))
        assert isomorphic(glued, left_star_flag(5))

    def test_power_one_is_identity(self):
        assert flag_power(left_edge_flag(), 1) == left_edge_flag()

    def test_power_three(self):
        assert isomorphic(flag_power(left_edge_flag(), 3), left_star_flag(3))

    def test_type_mismatch_rejected(self):
        with pytest.raises(PreconditionError):
            amalgamate(left_edge_flag(), right_edge_flag())

    def test_labels_must_exist_and_be_injective(self):
        with pytest.raises(ValueError):
            Flag(edge(), ("L0", "L0"))
        with pytest.raises(ValueError):
            Flag(edge(), ("Lx",))


class TestTwoCore:
    def test_tree_has_empty_core(self):
        assert two_core(path(5)).v == 0

    def test_cycle_is_its_own_core(self):
        assert two_core(even_cycle(4)) == even_cycle(4)

    def test_labeled_star_core(self):
        core = two_core(Flag(star(2), ("L0",)))
        assert core.underlying.v == 1 and core.underlying.e == 0
        assert core.labels == ("L0",)

    def test_idempotent(self, rng):
        for _ in range(30):
            g = random_bigraph(rng)
            f = Flag(g, g.canonical_sort(
                [v for v in g.vertices if rng.random() < 0.2]))
            once = two_core(f)
            assert two_core(once) == once

    def test_confluent_against_shuffled_peeling(self, rng):
        for _ in range(30):
            g = random_bigraph(rng)
            f = Flag(g)
            expected = set(two_core(f).underlying.vertices)
            for _ in range(20):
                assert peel_two_core(f, rng) == expected


class TestIsomorphism:
    def test_sides_must_match(self):
        assert not isomorphic(left_edge_flag(), right_edge_flag())

    def test_edge_counts_differ(self):
        assert not isomorphic(even_cycle(4), path(4))

    def test_label_preservation_required(self):
        f1 = Flag(star(2), ("L0",))
        f2 = Flag(star(2), ("R0",))
        assert not isomorphic(f1, f2)

    def test_witness_maps_edges(self, rng):
        g = book(3)
        h = dual(dual(g))
        iso = find_isomorphism(g, h)
        assert iso is not None
        for a, b in g.edges:
            assert (iso[a], iso[b]) in h.edges

    @given(small_bigraphs())
    @settings(max_examples=40, deadline=None)
    def test_reflexive(self, g):
        assert isomorphic(g, g)

    def test_equivalence_on_sampled_triples(self, rng):
        pool = [random_bigraph(rng, max_side=3) for _ in range(12)]
        for g in pool:
            assert isomorphic(g, g)
            for h in pool:
                assert isomorphic(g, h) == isomorphic(h, g)
        for g in pool:
            for h in pool:
                for k in pool:
                    if isomorphic(g, h) and isomorphic(h, k):
                        assert isomorphic(g, k)


class TestDegreeProfile:
    def test_star_profile(self):
        prof = degree_profile(star(3))
        assert (prof.delta1, prof.Delta1, prof.delta2, prof.Delta2) == (3, 3, 1, 1)
        assert prof.biregular

    def test_edge_biregular(self):
        prof = degree_profile(edge())
        assert prof.left_regular_degree == 1 and prof.right_regular_degree == 1


class TestFamilies:
    def test_tree_count_up_to_five(self):
        # 1, 1, 1, 2, 3 free trees on 1..5 vertices; both orientations kept,
        # with self-dual ones collapsing.
        with_five = [t for t in trees(5)]
        assert len(with_five) == 14

    def test_trees_are_connected_and_acyclic(self):
        for t in trees(6):
            assert is_connected(t)
            assert t.e == t.v - 1
