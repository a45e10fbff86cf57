import pytest
from hypothesis import given, settings, strategies as st

from lefschetz.cellspace import (
    CellPoset,
    SimplicialComplex,
    SimplicialSelfMap,
    complex_from_json,
    complex_to_json,
    diagonal_map,
    graph_map,
    incidence_sign,
    permutation_sign,
    product_poset,
    projection_map,
)


def circle3():
    return SimplicialComplex.from_facets([("0", "1"), ("1", "2"), ("0", "2")])


def circle4():
    return SimplicialComplex.from_facets(
        [("0", "1"), ("1", "2"), ("2", "3"), ("0", "3")]
    )


def triangle():
    return SimplicialComplex.from_facets([("0", "1", "2")])


class TestFromFacets:
    def test_circle_has_six_cells(self):
        assert len(circle3().simplices) == 6

    def test_triangle_has_seven_cells(self):
        assert len(triangle().simplices) == 7

    def test_point(self):
        assert len(SimplicialComplex.point().simplices) == 1

    def test_duplicate_vertices_rejected(self):
        with pytest.raises(ValueError):
            SimplicialComplex.from_facets([("a", "a")])

    def test_face_closure_required(self):
        with pytest.raises(ValueError):
            SimplicialComplex(["0", "1"], [("0",), ("1",), ("0", "1"), ("0", "1", "2")])


class TestIncidenceSign:
    def test_examples(self):
        assert incidence_sign(("0", "1"), ("0", "1", "2")) == 1
        assert incidence_sign(("0", "2"), ("0", "1", "2")) == -1
        assert incidence_sign(("0",), ("0", "1")) == -1

    def test_non_cover_rejected(self):
        with pytest.raises(ValueError):
            incidence_sign(("0",), ("0", "1", "2"))

    def test_boundary_squares_to_zero(self):
        # validated at poset construction for every complex
        for cx in (circle3(), circle4(), triangle()):
            cx.face_poset().validate()


class TestProduct:
    def test_point_times_point(self):
        p = SimplicialComplex.point("a").face_poset()
        q = SimplicialComplex.point("b").face_poset()
        prod = product_poset([p, q])
        assert len(prod.cells) == 1

    def test_circle_squared(self):
        p = circle3().face_poset()
        prod = product_poset([p, p])
        assert len(prod.cells) == 36
        prod.validate()

    def test_projections_monotone(self):
        p = circle3().face_poset()
        prod = product_poset([p, p])
        q1 = projection_map(prod, [0])
        q2 = projection_map(prod, [1])
        for c in prod.cells:
            assert q1(c) == (c[0],)

    def test_diagonal_vs_graph_of_identity(self):
        cx = circle3()
        d = diagonal_map(cx.face_poset())
        g = graph_map(SimplicialSelfMap.identity(cx))
        assert d == g

    def test_flattening(self):
        p = circle3().face_poset()
        pp = product_poset([p, p])
        ppp = product_poset([pp, p])
        assert len(ppp.atomic_factors()) == 3
        assert len(ppp.cells) == 216


class TestSelfMaps:
    def test_rotation_has_empty_locus(self):
        cx = circle3()
        rot = SimplicialSelfMap(cx, {"0": "1", "1": "2", "2": "0"})
        assert rot.fixed_locus().is_empty()

    def test_identity_locus_is_everything(self):
        cx = circle3()
        loc = SimplicialSelfMap.identity(cx).fixed_locus()
        assert len(loc.cells) == 6
        assert len(loc.components) == 1
        assert all(s == 1 for s in loc.signs.values())

    def test_reflection_of_square(self):
        cx = circle4()
        refl = SimplicialSelfMap(cx, {"0": "0", "1": "3", "2": "2", "3": "1"})
        loc = refl.fixed_locus()
        assert loc.cells == (("0",), ("2",))
        assert len(loc.components) == 2
        assert all(s == 1 for s in loc.signs.values())

    def test_edge_swap_sign(self):
        # swapping the endpoints of an interval fixes the edge with sign -1
        cx = SimplicialComplex.from_facets([("0", "1")])
        swap = SimplicialSelfMap(cx, {"0": "1", "1": "0"})
        loc = swap.fixed_locus()
        assert loc.cells == (("0", "1"),)
        assert loc.signs[("0", "1")] == -1

    def test_invalid_map_rejected(self):
        cx = SimplicialComplex.from_facets([("0", "1"), ("1", "2")])
        # 0 -> 0, 2 -> 2 but images of edge (0,1) -> (0, 2): not a simplex
        with pytest.raises(ValueError):
            SimplicialSelfMap(cx, {"0": "0", "1": "2", "2": "2"})

    def test_permutation_sign(self):
        assert permutation_sign([0, 1, 2]) == 1
        assert permutation_sign([1, 0, 2]) == -1
        assert permutation_sign([1, 2, 0]) == 1


class TestJson:
    def test_roundtrip(self):
        cx = circle4()
        data = complex_to_json(cx)
        back = complex_from_json(data)
        assert back.simplices == cx.simplices

    def test_format_shape(self):
        data = complex_to_json(triangle())
        assert set(data) == {"vertices", "facets"}
        assert data["facets"] == [["0", "1", "2"]]


@given(st.integers(min_value=3, max_value=7))
@settings(max_examples=10, deadline=None)
def test_cycle_complex_counts(n):
    facets = [(str(i), str((i + 1) % n)) for i in range(n)]
    cx = SimplicialComplex.from_facets(facets)
    assert len(cx.simplices) == 2 * n
    assert cx.euler_characteristic() == 0
    cx.face_poset().validate()
