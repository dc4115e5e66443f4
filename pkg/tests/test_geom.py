from fractions import Fraction
from itertools import combinations, permutations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mongeampere.geom import (ConvexPolygon, DegenerateBaseError, convex_hull, lift_facet_sign,
                              minkowski_sum, orient2d, point_in_polygon, polygon_area,
                              polygon_contains)

coord = st.floats(-8, 8, allow_nan=False, allow_infinity=False, width=64)
point = st.tuples(coord, coord)
small_int = st.integers(-6, 6)


def frac_orient(a, b, c):
    a, b, c = [tuple(map(Fraction, p)) for p in (a, b, c)]
    d = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return (d > 0) - (d < 0)


def frac_lift(a, b, c, d, ha, hb, hc, hd):
    """+1 if (d, hd) is strictly below the plane through the other three."""
    P = [tuple(map(Fraction, p)) for p in (a, b, c, d)]
    H = [Fraction(v) for v in (ha, hb, hc, hd)]
    (ax, ay), (bx, by), (cx, cy), (dx, dy) = P
    det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    lb = ((dx - ax) * (cy - ay) - (dy - ay) * (cx - ax)) / det
    lc = ((bx - ax) * (dy - ay) - (by - ay) * (dx - ax)) / det
    plane = H[0] + lb * (H[1] - H[0]) + lc * (H[2] - H[0])
    return (plane > H[3]) - (plane < H[3])


def brute_hull_vertices(pts):
    """Extreme points: not in the closed hull of any triangle of others, and
    not strictly inside a segment of two others."""
    pts = sorted(set(pts))
    out = []
    for p in pts:
        others = [q for q in pts if q != p]
        inside = False
        for a, b in combinations(others, 2):
            if frac_orient(a, b, p) == 0 and min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) \
                    and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]):
                inside = True
                break
        for a, b, c in combinations(others, 3):
            if inside:
                break
            s = [frac_orient(a, b, p), frac_orient(b, c, p), frac_orient(c, a, p)]
            if frac_orient(a, b, c) != 0 and (all(v >= 0 for v in s) or all(v <= 0 for v in s)):
                inside = True
        if not inside:
            out.append(p)
    return set(out)


def square(x0, y0, s):
    return ConvexPolygon(((x0, y0), (x0 + s, y0), (x0 + s, y0 + s), (x0, y0 + s)))


# ---------------------------------------------------------------- orient2d
def test_orient2d_examples():
    assert orient2d((0, 0), (1, 0), (0, 1)) == 1
    assert orient2d((0, 0), (1, 1), (2, 2)) == 0
    assert orient2d((0, 0), (0, 1), (1, 0)) == -1


def test_orient2d_near_degenerate_is_exact():
    # 0.1 + 0.2 != 0.3 in binary; the predicate must see the true sign
    a, b = (0.0, 0.0), (0.1, 0.1)
    for c in [(0.3, 0.3), (0.1 + 0.2, 0.3), (1e-300, 0.0), (0.5, 0.5 + 2**-52)]:
        assert orient2d(a, b, c) == frac_orient(a, b, c)


@given(point, point, point)
def test_orient2d_antisymmetric_and_exact(a, b, c):
    s = orient2d(a, b, c)
    assert s == -orient2d(a, c, b)
    assert s == frac_orient(a, b, c)


@given(point, point, st.floats(0, 1), st.integers(-3, 3))
def test_orient2d_on_perturbed_lines(a, b, t, k):
    # points on (or a few ulps off) the segment ab
    c = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
    c = (np.nextafter(c[0], np.inf) if k > 0 else c[0], c[1])
    assert orient2d(a, b, c) == frac_orient(a, b, c)


# ---------------------------------------------------------- lift_facet_sign
@pytest.mark.parametrize("t,expected", [(-0.5, -1), (0.5, 1), (0.0, 0)])
def test_lift_facet_sign_flip_example(t, expected):
    a, b, c, d = (1, 0), (0, -1), (0, 1), (-1, 0)
    assert lift_facet_sign(a, b, c, d, 0.0, 0.0, t, 0.0) == expected


def test_lift_facet_sign_degenerate_base():
    with pytest.raises(DegenerateBaseError):
        lift_facet_sign((0, 0), (1, 1), (2, 2), (0, 1), 0, 0, 0, 0)


def test_lift_facet_sign_orientation_free():
    a, b, c, d = (1, 0), (0, -1), (0, 1), (-1, 0)
    assert lift_facet_sign(a, c, b, d, 0, 0.5, 0, 0) == lift_facet_sign(a, b, c, d, 0, 0, 0.5, 0)


@given(st.lists(st.tuples(small_int, small_int), min_size=4, max_size=4, unique=True),
       st.lists(st.integers(-20, 20), min_size=4, max_size=4), st.integers(-2, 2))
def test_lift_facet_sign_matches_rational_oracle(P, H, k):
    a, b, c, d = [(x / 3.0, y / 7.0) for x, y in P]
    if frac_orient(a, b, c) == 0:
        return
    h = [v / 5.0 for v in H]
    # nudge hd to the coplanar value and a few ulps around it
    if k:
        plane = lift_plane_value(a, b, c, d, *h[:3])
        h[3] = float(plane)
        for _ in range(abs(k)):
            h[3] = np.nextafter(h[3], np.inf if k > 0 else -np.inf)
    assert lift_facet_sign(a, b, c, d, *h) == frac_lift(a, b, c, d, *h)


def lift_plane_value(a, b, c, d, ha, hb, hc):
    P = [tuple(map(Fraction, p)) for p in (a, b, c, d)]
    (ax, ay), (bx, by), (cx, cy), (dx, dy) = P
    det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    lb = ((dx - ax) * (cy - ay) - (dy - ay) * (cx - ax)) / det
    lc = ((bx - ax) * (dy - ay) - (by - ay) * (dx - ax)) / det
    return Fraction(ha) + lb * (Fraction(hb) - Fraction(ha)) + lc * (Fraction(hc) - Fraction(ha))


# -------------------------------------------------------------- convex_hull
def test_convex_hull_examples():
    h = convex_hull([(1, 0), (-1, 0), (0, 1), (0, -1), (0, 0)])
    assert len(h) == 4 and set(h.vertices) == {(1, 0), (-1, 0), (0, 1), (0, -1)}
    seg = convex_hull([(0, 0), (1, 2), (-1, -2)])
    assert seg.vertices == ((-1.0, -2.0), (1.0, 2.0))
    assert convex_hull([(0, 0)]).vertices == ((0.0, 0.0),)
    assert convex_hull([]).vertices == ()
    assert convex_hull([(1, 1), (1, 1)]).vertices == ((1.0, 1.0),)


def test_convex_hull_is_counterclockwise():
    h = convex_hull([(0, 0), (2, 0), (2, 2), (0, 2), (1, 1), (1, 0)])
    v = h.vertices
    assert len(v) == 4
    assert all(orient2d(v[k], v[(k + 1) % 4], v[(k + 2) % 4]) > 0 for k in range(4))


@given(st.lists(st.tuples(small_int, small_int), min_size=1, max_size=8))
def test_convex_hull_matches_brute_force(P):
    pts = [(float(x), float(y)) for x, y in P]
    h = convex_hull(pts)
    assert set(h.vertices) == brute_hull_vertices(pts)


@given(st.lists(point, min_size=1, max_size=10), st.randoms(use_true_random=False))
def test_convex_hull_idempotent_and_permutation_invariant(pts, rnd):
    h = convex_hull(pts)
    assert convex_hull(h.vertices) == h
    shuffled = list(pts)
    rnd.shuffle(shuffled)
    assert convex_hull(shuffled) == h


# ------------------------------------------------------------ polygon_area
def test_polygon_area_examples():
    assert polygon_area(square(-0.5, -0.5, 1.0)) == 1.0
    assert polygon_area(convex_hull([(-1, -2), (1, 2)])) == 0.0
    assert polygon_area(convex_hull([(0, 0), (3, 0), (0, 3)])) == 4.5
    assert polygon_area(ConvexPolygon()) == 0.0


# ----------------------------------------------------------- minkowski_sum
def test_minkowski_examples():
    s = minkowski_sum(square(0, 0, 1), square(0, 0, 2))
    assert s == convex_hull(square(0, 0, 3).vertices)
    t = minkowski_sum(ConvexPolygon(((1.0, 1.0),)), square(0, 0, 1))
    assert t == convex_hull(square(1, 1, 1).vertices)
    u = minkowski_sum(convex_hull([(0, 0), (1, 0)]), convex_hull([(0, 0), (0, 1)]))
    assert u == convex_hull(square(0, 0, 1).vertices)
    assert minkowski_sum(ConvexPolygon(), square(0, 0, 1)) == ConvexPolygon()


polys = st.lists(st.tuples(small_int, small_int), min_size=1, max_size=7).map(
    lambda P: convex_hull([(x / 2.0, y / 2.0) for x, y in P]))


@given(polys, polys)
def test_minkowski_matches_pairwise_sum_hull(A, B):
    brute = convex_hull([(a[0] + b[0], a[1] + b[1]) for a in A.vertices for b in B.vertices])
    assert minkowski_sum(A, B) == brute
    assert minkowski_sum(A, B) == minkowski_sum(B, A)


@given(st.lists(point, min_size=1, max_size=8), st.lists(point, min_size=1, max_size=8))
def test_brunn_minkowski_and_superadditivity(P, Q):
    A, B = convex_hull(P), convex_hull(Q)
    a, b = polygon_area(A), polygon_area(B)
    s = polygon_area(minkowski_sum(A, B))
    scale = 1.0 + s
    assert np.sqrt(s) >= np.sqrt(a) + np.sqrt(b) - 1e-12 * scale
    assert s >= a + b - 1e-12 * scale


@given(st.lists(point, min_size=3, max_size=8), st.floats(0.1, 4.0), point)
def test_brunn_minkowski_equality_for_homothets(P, t, v):
    A = convex_hull(P)
    if polygon_area(A) < 1e-3:
        return
    B = ConvexPolygon(tuple((t * x + v[0], t * y + v[1]) for x, y in A.vertices))
    a, b = polygon_area(A), polygon_area(B)
    s = polygon_area(minkowski_sum(A, B))
    assert abs(np.sqrt(s) - np.sqrt(a) - np.sqrt(b)) <= 1e-12 * (1 + np.sqrt(s))


# -------------------------------------------------------- polygon_contains
def test_polygon_contains_examples():
    unit = square(0, 0, 1)
    assert polygon_contains(unit, square(0.25, 0.25, 0.5))
    assert not polygon_contains(unit, square(0, 0, 2))
    assert polygon_contains(unit, unit)
    seg = convex_hull([(0, 0), (1, 1)])
    assert polygon_contains(unit, seg)
    assert polygon_contains(seg, ConvexPolygon(((0.5, 0.5),)))
    assert not polygon_contains(seg, ConvexPolygon(((0.5, 0.5 + 2**-50),)))


@given(polys, point)
def test_point_in_polygon_matches_rational_oracle(A, x):
    v = A.vertices
    if len(v) < 3:
        return
    expected = all(frac_orient(v[k], v[(k + 1) % len(v)], x) >= 0 for k in range(len(v)))
    assert point_in_polygon(A, x) == expected


def test_canonical_polygons_drop_collinear_vertices():
    pts = [(0, 0), (1, 0), (2, 0), (2, 2), (0, 2), (0, 1)]
    assert len(convex_hull(pts)) == 4
    for p in permutations(pts[:4]):
        assert convex_hull(p) == convex_hull(pts[:4])
