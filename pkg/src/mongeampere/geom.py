"""Planar geometry with exact combinatorial decisions.

Orientation-type predicates are evaluated with a floating-point filter and
fall back to exact integer arithmetic (the float inputs scaled by a common
power of two) when the filter cannot certify the sign.  Every combinatorial decision in the
package (hulls, flips, point location, containment) goes through them.
Areas and Minkowski sums are plain floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

_EPS = 2.0**-53
_CCW_BOUND = (3.0 + 16.0 * _EPS) * _EPS
_O3D_BOUND = (7.0 + 56.0 * _EPS) * _EPS
_ICC_BOUND = (10.0 + 96.0 * _EPS) * _EPS

Point2 = tuple  # (x, y) pair of floats


class DegenerateBaseError(ValueError):
    """Raised when a lifted-plane predicate is given three collinear points."""


def _sign(v) -> int:
    return (v > 0) - (v < 0)


def orient2d(a, b, c) -> int:
    """Sign of the determinant ``|b - a, c - a|``, exact.

    +1 when ``a, b, c`` turn counterclockwise, -1 clockwise, 0 collinear.
    """
    detleft = (a[0] - c[0]) * (b[1] - c[1])
    detright = (a[1] - c[1]) * (b[0] - c[0])
    det = detleft - detright
    bound = _CCW_BOUND * (abs(detleft) + abs(detright))
    if det > bound:
        return 1
    if -det > bound:
        return -1
    if bound == 0.0:
        return 0
    return _orient2d_exact(a, b, c)


def _ints(*vals):
    """Scale floats by a common power of two so that all become integers.

    Determinant signs are invariant under a positive common scale, and
    integer arithmetic is much faster than rationals.
    """
    ratios = [v.as_integer_ratio() for v in vals]
    den = max(d for _, d in ratios)
    return [n * (den // d) for n, d in ratios]


def _orient2d_exact(a, b, c) -> int:
    ax, ay, bx, by, cx, cy = _ints(a[0], a[1], b[0], b[1], c[0], c[1])
    return _sign((ax - cx) * (by - cy) - (ay - cy) * (bx - cx))


def _orient3d(a, b, c, d, ha, hb, hc, hd) -> int:
    """Sign of det[[a-d, ha-hd], [b-d, hb-hd], [c-d, hc-hd]], exact.

    Positive when the lifted ``d`` lies below the plane through the lifted
    ``a, b, c`` and ``a, b, c`` are counterclockwise.
    """
    adx, ady, adz = a[0] - d[0], a[1] - d[1], ha - hd
    bdx, bdy, bdz = b[0] - d[0], b[1] - d[1], hb - hd
    cdx, cdy, cdz = c[0] - d[0], c[1] - d[1], hc - hd
    bdxcdy = bdx * cdy
    cdxbdy = cdx * bdy
    cdxady = cdx * ady
    adxcdy = adx * cdy
    adxbdy = adx * bdy
    bdxady = bdx * ady
    det = (adz * (bdxcdy - cdxbdy) + bdz * (cdxady - adxcdy)
           + cdz * (adxbdy - bdxady))
    perm = ((abs(bdxcdy) + abs(cdxbdy)) * abs(adz)
            + (abs(cdxady) + abs(adxcdy)) * abs(bdz)
            + (abs(adxbdy) + abs(bdxady)) * abs(cdz))
    bound = _O3D_BOUND * perm
    if det > bound:
        return 1
    if -det > bound:
        return -1
    if perm == 0.0:
        return 0
    # the determinant is homogeneous in the planar and height coordinates
    # separately, so each group gets its own scale
    ax, ay, bx, by, cx, cy, dx, dy = _ints(a[0], a[1], b[0], b[1], c[0], c[1], d[0], d[1])
    za, zb, zc, zd = _ints(float(ha), float(hb), float(hc), float(hd))
    adx, ady, adz = ax - dx, ay - dy, za - zd
    bdx, bdy, bdz = bx - dx, by - dy, zb - zd
    cdx, cdy, cdz = cx - dx, cy - dy, zc - zd
    return _sign(adz * (bdx * cdy - cdx * bdy) + bdz * (cdx * ady - adx * cdy)
                 + cdz * (adx * bdy - bdx * ady))


def _incircle(a, b, c, d) -> int:
    """Shewchuk's incircle sign, exact: +1 if ``d`` is inside the circle
    through counterclockwise ``a, b, c``."""
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    bdxcdy = bdx * cdy
    cdxbdy = cdx * bdy
    alift = adx * adx + ady * ady
    cdxady = cdx * ady
    adxcdy = adx * cdy
    blift = bdx * bdx + bdy * bdy
    adxbdy = adx * bdy
    bdxady = bdx * ady
    clift = cdx * cdx + cdy * cdy
    det = (alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy)
           + clift * (adxbdy - bdxady))
    perm = ((abs(bdxcdy) + abs(cdxbdy)) * alift
            + (abs(cdxady) + abs(adxcdy)) * blift
            + (abs(adxbdy) + abs(bdxady)) * clift)
    bound = _ICC_BOUND * perm
    if det > bound:
        return 1
    if -det > bound:
        return -1
    if perm == 0.0:
        return 0
    ax, ay, bx, by, cx, cy, dx, dy = _ints(a[0], a[1], b[0], b[1], c[0], c[1], d[0], d[1])
    adx, ady = ax - dx, ay - dy
    bdx, bdy = bx - dx, by - dy
    cdx, cdy = cx - dx, cy - dy
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    return _sign(alift * (bdx * cdy - cdx * bdy) + blift * (cdx * ady - adx * cdy)
                 + clift * (adx * bdy - bdx * ady))


def lift_facet_sign(a, b, c, d, ha, hb, hc, hd) -> int:
    """Position of the lifted point ``(d, hd)`` against the plane through
    ``(a, ha), (b, hb), (c, hc)``.

    Returns +1 if ``(d, hd)`` lies strictly below the plane, -1 if strictly
    above and 0 if the four lifted points are coplanar.

    Raises
    ------
    DegenerateBaseError
        If ``a, b, c`` are collinear.
    """
    o = orient2d(a, b, c)
    if o == 0:
        raise DegenerateBaseError("base points of the lifted plane are collinear")
    return o * _orient3d(a, b, c, d, ha, hb, hc, hd)


def below_perturbed(pts, heights, a: int, b: int, c: int, d: int, o: int | None = None) -> bool:
    """Is lifted node ``d`` below the plane through lifted ``a, b, c``?

    Decided for the symbolically perturbed heights
    ``u_k + eps |x_k|^2 + sum_j eps^(2 + j) [k == j]``: exact ties in ``u``
    are resolved by the paraboloid term (points interior to a facet count as
    lying below it), remaining ties by node index (lowest index is raised
    most).  Never returns a tie; ``a, b, c`` must not be collinear.
    """
    pa, pb, pc, pd = pts[a], pts[b], pts[c], pts[d]
    if o is None:
        o = orient2d(pa, pb, pc)
    s = _orient3d(pa, pb, pc, pd, heights[a], heights[b], heights[c], heights[d])
    if s:
        return s * o > 0
    s = _incircle(pa, pb, pc, pd)
    if s:
        return s * o > 0
    # hd - P(d) gains +delta_d and -lambda_v delta_v for v in {a, b, c}
    coef = {
        d: 1,
        a: -orient2d(pd, pb, pc) * o,
        b: -orient2d(pa, pd, pc) * o,
        c: -orient2d(pa, pb, pd) * o,
    }
    for v in sorted(coef):
        if coef[v]:
            return coef[v] < 0
    raise AssertionError("unreachable: coefficient of d is nonzero")


@dataclass(frozen=True)
class ConvexPolygon:
    """Counterclockwise, strictly convex vertex list.

    Empty, point and segment polygons have 0, 1 and 2 vertices.
    """

    vertices: tuple = ()

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def area(self) -> float:
        return polygon_area(self)

    def translate(self, v) -> "ConvexPolygon":
        return ConvexPolygon(tuple((p[0] + v[0], p[1] + v[1]) for p in self.vertices))


def convex_hull(points: Iterable[Sequence[float]]) -> ConvexPolygon:
    """Canonical counterclockwise hull (Andrew's monotone chain).

    Duplicates, interior and collinear boundary points are dropped; a
    collinear input yields a two-vertex segment ordered lexicographically.
    """
    pts = sorted({(float(p[0]), float(p[1])) for p in points})
    if len(pts) <= 2:
        return ConvexPolygon(tuple(pts))
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and orient2d(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and orient2d(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) == 2 and hull[0] == hull[1]:
        hull = hull[:1]
    return ConvexPolygon(tuple(hull))


def polygon_area(p: ConvexPolygon) -> float:
    """Shoelace area, 0 for fewer than three vertices."""
    v = p.vertices
    n = len(v)
    if n < 3:
        return 0.0
    # centre the coordinates: keeps cancellation small for tiny polygons far from 0
    cx = sum(q[0] for q in v) / n
    cy = sum(q[1] for q in v) / n
    s = 0.0
    for k in range(n):
        x0, y0 = v[k][0] - cx, v[k][1] - cy
        x1, y1 = v[(k + 1) % n][0] - cx, v[(k + 1) % n][1] - cy
        s += x0 * y1 - x1 * y0
    return 0.5 * abs(s)


def _edge_vectors(v):
    n = len(v)
    return [(v[(k + 1) % n][0] - v[k][0], v[(k + 1) % n][1] - v[k][1]) for k in range(n)]


def _bottom_index(v) -> int:
    return min(range(len(v)), key=lambda k: (v[k][1], v[k][0]))


def minkowski_sum(p: ConvexPolygon, q: ConvexPolygon) -> ConvexPolygon:
    """Minkowski sum by merging edge vectors in polar order."""
    if not p.vertices or not q.vertices:
        return ConvexPolygon()
    if len(p) == 1:
        return q.translate(p.vertices[0])
    if len(q) == 1:
        return p.translate(q.vertices[0])
    a = list(p.vertices)
    b = list(q.vertices)
    ia, ib = _bottom_index(a), _bottom_index(b)
    a = a[ia:] + a[:ia]
    b = b[ib:] + b[:ib]
    ea, eb = _edge_vectors(a), _edge_vectors(b)
    out = [(a[0][0] + b[0][0], a[0][1] + b[0][1])]
    i = j = 0
    x, y = out[0]
    while i < len(ea) or j < len(eb):
        if i == len(ea):
            e = eb[j]
            j += 1
        elif j == len(eb):
            e = ea[i]
            i += 1
        else:
            cross = orient2d((0.0, 0.0), ea[i], eb[j])
            if cross > 0:
                e = ea[i]
                i += 1
            elif cross < 0:
                e = eb[j]
                j += 1
            else:
                e = (ea[i][0] + eb[j][0], ea[i][1] + eb[j][1])
                i += 1
                j += 1
        x, y = x + e[0], y + e[1]
        out.append((x, y))
    # the walk closes on the start vertex; recanonicalise to strip collinear runs
    return convex_hull(out[:-1])


def _on_segment(a, b, p) -> bool:
    return (min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))


def point_in_polygon(p: ConvexPolygon, x) -> bool:
    """Closed containment of a point in a canonical convex polygon."""
    v = p.vertices
    n = len(v)
    if n == 0:
        return False
    if n == 1:
        return v[0][0] == x[0] and v[0][1] == x[1]
    if n == 2:
        return orient2d(v[0], v[1], x) == 0 and _on_segment(v[0], v[1], x)
    return all(orient2d(v[k], v[(k + 1) % n], x) >= 0 for k in range(n))


def polygon_contains(p: ConvexPolygon, q: ConvexPolygon) -> bool:
    """True iff every vertex of ``q`` lies in the closed polygon ``p``."""
    return all(point_in_polygon(p, x) for x in q.vertices)
