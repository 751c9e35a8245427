"""Combinatorics of all-right complexes, their sphere maps, and cubical complexes."""
from itertools import combinations, permutations
from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conesmith import complexes as C
from conesmith.widths import sample_complex


def isomorphic(a: C.AllRightComplex, b: C.AllRightComplex) -> bool:
    if a.f_vector() != b.f_vector():
        return False
    va, vb = list(a.vertices), list(b.vertices)
    target = {frozenset(f) for f in b.maximal}
    for perm in permutations(vb):
        m = dict(zip(va, perm))
        if {frozenset(m[v] for v in f) for f in a.maximal} == target:
            return True
    return False


def cycle_order(P):
    return C.recognize_join(P)[1]


@pytest.mark.parametrize("m", [0, 1, 2, 3, 4])
def test_canonical_sphere_counts(m):
    # the boundary of the cross polytope has 2^(k+1) C(m+1, k+1) k-simplices
    P = C.canonical_sphere(m)
    assert P.f_vector() == [2 ** (k + 1) * comb(m + 1, k + 1) for k in range(m + 1)]


def test_small_counts():
    assert C.canonical_sphere(2).f_vector() == [6, 12, 8]
    assert C.canonical_sphere(1).f_vector() == [4, 4]
    assert C.canonical_sphere(3).f_vector()[-1] == 16


@pytest.mark.parametrize("k", [3, 4, 5, 8])
def test_circle_layout_speed(k):
    P = C.circle_complex(k)
    lay = C.JoinSmoothing(P)
    assert lay.k == k / 4
    # total length k * pi/2 maps to the full turn
    assert lay.circle_angle(k * np.pi / 2) == pytest.approx(2 * np.pi)


def test_suspended_square_is_octahedron():
    assert isomorphic(C.suspension(C.circle_complex(4)), C.canonical_sphere(2))


def test_suspended_pentagon_links(pentagon):
    assert len(pentagon.vertices) == 7
    poles = [v for v in pentagon.vertices if not str(v).startswith("c")]
    for p in poles:
        assert isomorphic(pentagon.link({p}), C.circle_complex(5))
    # an equatorial vertex sees its two polygon neighbours and the two poles
    link = pentagon.link({"c0"})
    assert link.f_vector() == [4, 4]
    assert isomorphic(link, C.circle_complex(4))
    assert set(link.vertices) == {"c1", "c4", *poles}


@pytest.mark.parametrize("m", [1, 2, 3])
def test_vertex_link_of_canonical_sphere(m):
    P = C.canonical_sphere(m)
    assert isomorphic(P.link({"+0"}), C.canonical_sphere(m - 1))


def test_edge_link_in_octahedron_is_two_points():
    link = C.canonical_sphere(2).link({"+0", "+1"})
    assert link.f_vector() == [2]


@given(st.data())
def test_link_of_link(data):
    P = C.canonical_sphere(3)
    big = data.draw(st.sampled_from(P.simplices()))
    size = data.draw(st.integers(0, len(big) - 1))
    small = frozenset(data.draw(st.permutations(sorted(big)))[:size])
    assert C.link_transitivity_holds(P, small, big)


def test_intersection_condition(pentagon):
    assert pentagon.intersection_condition()
    assert C.canonical_sphere(3).intersection_condition()


def test_star_local_distance_examples(pentagon):
    D = ("c0", "c1")
    assert C.star_local_distance(C.barycenter(D), D, pentagon) == pytest.approx(0.0, abs=1e-12)
    opp = C.SimplexPoint(("c0", "c1", "n0"), np.array([0.0, 0.0, 1.0]))
    assert C.star_local_distance(opp, D, pentagon) == pytest.approx(np.pi / 2)
    # equal weights on the simplex and on the opposite vertex
    w = np.array([1.0, 1.0]) / np.sqrt(2)
    x = np.concatenate([w, [1.0]]) / np.sqrt(2)
    mid = C.SimplexPoint(("c0", "c1", "n0"), x)
    assert C.star_local_distance(mid, D, pentagon) == pytest.approx(np.pi / 4)
    far = C.SimplexPoint(("c2", "c3"), np.array([1.0, 0.0]))
    assert C.star_local_distance(far, D, pentagon) is None


def test_simplex_point_validation():
    with pytest.raises(ValueError):
        C.SimplexPoint(("a", "b"), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        C.SimplexPoint(("a", "b"), np.array([1.0]))


@pytest.mark.parametrize("P", [C.circle_complex(5), C.suspension(C.circle_complex(5)), C.canonical_sphere(2),
                               C.suspension(C.suspension(C.circle_complex(6))), C.circle_complex(3)])
def test_sphere_map_round_trip(P):
    lay = C.JoinSmoothing(P)
    X = sample_complex(P, 500, np.random.default_rng(0))
    N = lay.to_sphere(X)
    np.testing.assert_allclose(np.linalg.norm(N, axis=1), 1, atol=1e-12)
    np.testing.assert_allclose(lay.from_sphere(N), X, atol=1e-12)


def test_polygon_map_is_constant_speed():
    P = C.circle_complex(5)
    lay = C.JoinSmoothing(P)
    order = cycle_order(P)
    # a point at angle phi inside segment j lands at angle (j pi/2 + phi) / k
    for j in range(5):
        for phi in (0.1, 0.7, 1.3):
            X = np.zeros((1, 5))
            X[0, P.index[order[j]]] = np.cos(phi)
            X[0, P.index[order[(j + 1) % 5]]] = np.sin(phi)
            n = lay.to_sphere(X)[0]
            ang = np.mod(np.arctan2(n[1], n[0]), 2 * np.pi)
            assert ang == pytest.approx(np.mod((j * np.pi / 2 + phi) / 1.25, 2 * np.pi))


def test_induced_layout_matches_link(pentagon):
    lay = C.JoinSmoothing(pentagon)
    for simp in pentagon.simplices(0) + pentagon.simplices(1):
        sub = C.induced_layout(lay, simp)
        assert sub.complex == pentagon.link(simp)
        X = sample_complex(sub.complex, 50, np.random.default_rng(1))
        np.testing.assert_allclose(sub.from_sphere(sub.to_sphere(X)), X, atol=1e-12)


def test_recognize_join_rejects_other_complexes():
    with pytest.raises(ValueError):
        C.JoinSmoothing(C.AllRightComplex([{"a", "b"}, {"b", "c"}]))


def test_json_round_trip(tmp_path, pentagon):
    import json
    path = tmp_path / "p.json"
    path.write_text(json.dumps(pentagon.to_json()))
    assert C.load_complex(str(path)) == pentagon
    K = C.cube_product(C.flower(3), C.cycle_cubes(4))
    back = C.load_complex(json.loads(json.dumps(K.to_json())))
    assert set(back.cubes) == set(K.cubes)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_single_cube_face_count(n):
    assert len(C.single_cube(n).cubes) == 3 ** n


def test_single_cube_links_are_simplices():
    K = C.single_cube(3)
    for key in K.of_dim(0):
        assert K.link(key).f_vector() == [3, 3, 1]
    for key in K.of_dim(1):
        assert K.link(key).f_vector() == [2, 1]


def test_boundary_cube_vertex_links_are_triangles():
    K = C.cube_boundary(3)
    assert len(K.of_dim(2)) == 6
    for key in K.of_dim(0):
        assert isomorphic(K.link(key), C.circle_complex(3))


def test_glued_cubes_share_two_point_link():
    K = C.CubicalComplex([(0, 1, 2, 3), (2, 3, 4, 5)])
    shared = frozenset({2, 3})
    assert K.link(shared).f_vector() == [2]


def test_flower_center_link():
    K = C.flower(5)
    assert isomorphic(K.link(frozenset({"o"})), C.circle_complex(5))


def test_cube_product_dimension():
    K = C.cube_product(C.flower(5), C.cycle_cubes(4))
    assert K.dim == 3
    assert len(K.of_dim(3)) == 20
    centre = frozenset({"o.z0", "o.z1"})
    assert isomorphic(K.link(centre), C.circle_complex(5))


def test_malformed_cube():
    with pytest.raises(ValueError):
        C.CubicalComplex([(0, 1, 2)])
