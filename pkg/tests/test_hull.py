import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randpoly.errors import DegenerateHullError
from randpoly.hull import (Polytope, contains_point, convex_hull, halfspace_intersection, mean_width,
                           planar_hull_batch, polar_polytope, qhull_stats, volume)
from randpoly.lp import lp_facet_count, lp_is_bounded

from oracles import barycentric_inside, brute_force_facets, gift_wrap, random_ball_points, shoelace


def facet_sets(P: Polytope) -> set[frozenset[int]]:
    return {frozenset(P.vertex_ids[i] for i in inc) for inc in P.incidence}


def cube_vertices(d):
    return np.array(np.meshgrid(*[[-1.0, 1.0]] * d)).reshape(d, -1).T


@pytest.mark.parametrize("method", ["beneath-beyond", "qhull"])
@pytest.mark.parametrize("d", [2, 3, 4])
def test_simplex_hull(d, method, rng):
    pts = rng.standard_normal((d + 1, d))
    P = convex_hull(pts, method=method)
    assert P.f0 == d + 1
    assert P.n_facets == d + 1


@pytest.mark.parametrize("method", ["beneath-beyond", "qhull"])
@pytest.mark.parametrize("d", [2, 3])
def test_cube_plus_origin(d, method):
    pts = np.vstack([cube_vertices(d), np.zeros(d)])
    P = convex_hull(pts, method=method)
    assert P.n_facets == 2 * d
    assert P.f0 == 2 ** d
    assert len(pts) - 1 not in P.vertex_ids


@pytest.mark.parametrize("method", ["beneath-beyond", "qhull"])
def test_facets_match_brute_force_b3(method):
    rng = np.random.default_rng(50)
    pts = random_ball_points(rng, 50, 3)
    P = convex_hull(pts, method=method)
    assert facet_sets(P) == brute_force_facets(pts)


def test_planar_hull_matches_gift_wrap(rng):
    for _ in range(20):
        pts = random_ball_points(rng, 25, 2)
        P = convex_hull(pts)
        assert set(P.vertex_ids) == set(gift_wrap(pts))


def test_euler_relation(rng):
    for _ in range(10):
        P = convex_hull(random_ball_points(rng, 40, 3))
        f0, f1, f2 = P.f_vector()
        assert f0 - f1 + f2 == 2


def test_hull_idempotent(rng):
    pts = random_ball_points(rng, 60, 3)
    P = convex_hull(pts)
    Q = convex_hull(P.vertices)
    assert Q.f0 == P.f0 and Q.n_facets == P.n_facets
    assert abs(volume(P) - volume(Q)) < 1e-12


def test_degenerate_hull_raises():
    pts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]])
    with pytest.raises(DegenerateHullError):
        convex_hull(pts)


def test_polar_of_cube_is_cross_polytope():
    P = polar_polytope(convex_hull(cube_vertices(3)))
    assert P.f0 == 6 and P.n_facets == 8
    expected = np.vstack([np.eye(3), -np.eye(3)])
    got = np.array(sorted(map(tuple, np.round(P.vertices, 12))))
    assert np.allclose(got, np.array(sorted(map(tuple, expected))), atol=1e-12)


def test_polar_of_simplex_swaps_f_vector():
    verts = np.array([[1.0, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]])
    P = convex_hull(verts)
    Q = polar_polytope(P)
    assert Q.f_vector() == P.f_vector()[::-1]


def test_double_polar_round_trip():
    rng = np.random.default_rng(30)
    P = convex_hull(random_ball_points(rng, 30, 3) + 0.0)
    assert np.all(P.offsets > 0)
    PP = polar_polytope(polar_polytope(P))
    a = np.array(sorted(map(tuple, P.vertices)))
    b = np.array(sorted(map(tuple, PP.vertices)))
    assert np.abs(a - b).max() <= 1e-8


@pytest.mark.parametrize("d", [2, 3])
def test_halfspaces_axis_cube(d):
    u = np.vstack([np.eye(d), -np.eye(d)])
    H = halfspace_intersection(u, np.ones(2 * d))
    assert H.bounded
    assert abs(volume(H.polytope) - 2.0 ** d) < 1e-10
    assert H.polytope.f0 == 2 ** d


@pytest.mark.parametrize("d", [2, 3])
def test_d_halfspaces_unbounded(d, rng):
    u = rng.standard_normal((d, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    H = halfspace_intersection(u, np.ones(d))
    assert not H.bounded
    assert not lp_is_bounded(u, np.ones(d))


def test_tangent_polygon_radius():
    m = 100
    gap = 2 * math.pi / m
    theta = np.arange(m) * gap
    u = np.column_stack([np.cos(theta), np.sin(theta)])
    H = halfspace_intersection(u, np.ones(m))
    r = np.linalg.norm(H.polytope.vertices, axis=1)
    assert gap < 0.28
    assert np.all(r >= 1 - 1e-12) and np.all(r <= 1.01)
    assert np.allclose(r, 1 / math.cos(gap / 2), rtol=1e-12)


def test_boundedness_matches_lp(rng):
    for _ in range(100):
        d = int(rng.integers(2, 4))
        n = int(rng.integers(d + 1, 3 * d + 2))
        u = rng.standard_normal((n, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        t = rng.uniform(0.5, 2.0, n)
        H = halfspace_intersection(u, t)
        assert H.bounded == lp_is_bounded(u, t)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_unit_simplex_volume(d):
    pts = np.vstack([np.zeros(d), np.eye(d)])
    assert abs(volume(convex_hull(pts)) - 1 / math.factorial(d)) < 1e-14


@pytest.mark.parametrize("d", [2, 3, 4])
def test_cube_volume(d):
    assert abs(volume(convex_hull(cube_vertices(d))) - 2.0 ** d) < 1e-12


def test_volume_matches_shoelace():
    rng = np.random.default_rng(20)
    pts = random_ball_points(rng, 20, 2)
    P = convex_hull(pts)
    assert abs(volume(P) - shoelace(pts, gift_wrap(pts))) < 1e-12


def test_mean_width_values():
    assert mean_width(np.zeros((1, 3))) == 0.0
    for a in (1.0, 2.0, 3.5):
        assert abs(mean_width(convex_hull(a / 2 * cube_vertices(3))) - 1.5 * a) < 1e-12
        assert abs(mean_width(convex_hull(a / 2 * cube_vertices(2))) - 4 * a / math.pi) < 1e-12


def test_mean_width_of_fine_polygon_approaches_ball():
    m = 2000
    theta = 2 * math.pi * np.arange(m) / m
    P = convex_hull(np.column_stack([np.cos(theta), np.sin(theta)]))
    assert abs(mean_width(P) - 2.0) < 1e-5


def test_mean_width_monotone(rng):
    pts = random_ball_points(rng, 40, 3)
    P = convex_hull(pts[:20])
    Q = convex_hull(pts)
    assert mean_width(P) <= mean_width(Q) + 1e-12


def test_contains():
    P = convex_hull(cube_vertices(3))
    assert contains_point(P, P.centroid)
    v = P.vertices[0]
    assert not contains_point(P, v + 1e-6 * v / np.linalg.norm(v))


def test_contains_matches_barycentric():
    rng = np.random.default_rng(4)
    simplex = rng.standard_normal((4, 3))
    P = convex_hull(simplex)
    lo, hi = simplex.min(axis=0), simplex.max(axis=0)
    x = lo + (hi - lo) * rng.random((10_000, 3))
    assert np.array_equal(P.contains(x, tol=0.0), barycentric_inside(simplex, x))


def test_json_round_trip(rng):
    P = convex_hull(random_ball_points(rng, 25, 3))
    Q = Polytope.from_json(P.to_json())
    assert np.array_equal(P.vertices, Q.vertices)
    assert np.array_equal(P.normals, Q.normals)
    assert np.array_equal(P.offsets, Q.offsets)
    assert P.incidence == Q.incidence


def test_lp_cube_counts():
    u = np.vstack([np.eye(3), -np.eye(3)])
    assert lp_facet_count(u, np.ones(6)) == 6
    u2 = np.vstack([u, [1.0, 0, 0]])
    assert lp_facet_count(u2, np.r_[np.ones(6), 3.0]) == 6


def test_qhull_stats_agree(rng):
    for _ in range(10):
        pts = random_ball_points(rng, 30, 3)
        f0, vol = qhull_stats(pts)
        P = convex_hull(pts)
        assert f0 == P.f0 and abs(vol - volume(P)) < 1e-12
    assert qhull_stats(np.zeros((3, 3))) == (3, 0.0)


def test_planar_batch_matches_hulls(rng):
    pts = np.stack([random_ball_points(rng, 15, 2) for _ in range(50)])
    f0, area = planar_hull_batch(pts)
    for i in range(50):
        order = gift_wrap(pts[i])
        assert f0[i] == len(order)
        assert abs(area[i] - shoelace(pts[i], order)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(5, 30), d=st.sampled_from([2, 3]))
def test_property_beneath_beyond_equals_qhull(seed, n, d):
    pts = random_ball_points(np.random.default_rng(seed), n, d)
    a = convex_hull(pts, method="beneath-beyond")
    b = convex_hull(pts, method="qhull")
    assert facet_sets(a) == facet_sets(b)
    assert abs(volume(a) - volume(b)) < 1e-12
