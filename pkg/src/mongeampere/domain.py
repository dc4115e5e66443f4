"""Domains, translation-invariant node sets, the Delaunay base mesh and
right-hand side assembly."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import permutations
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from .geom import orient2d
from .triangulation import CollinearNodesError, RegularTriangulation, sweep_triangulation

__all__ = [
    "BaseMesh",
    "ConvexDomain",
    "Disk",
    "Ellipse",
    "EmptyInteriorError",
    "NegativeDensityError",
    "NodeSet",
    "OutsideDomainError",
    "RhsVector",
    "assemble_rhs",
    "assemble_rhs_dirac",
    "delaunay",
    "generate_nodes",
    "lattice_patch",
    "read_mesh",
    "write_mesh",
]


class EmptyInteriorError(ValueError):
    """No lattice node survives inside the domain."""


class NegativeDensityError(ValueError):
    """A quadrature sample of the density was negative."""


class OutsideDomainError(ValueError):
    """A point mass was placed outside the domain."""


# --------------------------------------------------------------------------
# domains


class ConvexDomain:
    """Uniformly convex planar domain."""

    kind = "abstract"

    def contains(self, p) -> bool:
        raise NotImplementedError

    def distance_to_boundary(self, p) -> float:
        raise NotImplementedError

    @property
    def perimeter(self) -> float:
        raise NotImplementedError

    def boundary_point(self, s: float):
        """Point at arc length ``s`` from the start of the parameterization."""
        raise NotImplementedError

    @property
    def curvature_radius(self) -> float:
        """Radius ``r`` with boundary curvature bounded below by ``1/r``."""
        raise NotImplementedError

    @property
    def enclosing_radius(self) -> float:
        """Radius ``R`` with the domain contained in ``B_R(0)``."""
        raise NotImplementedError

    @property
    def diameter(self) -> float:
        raise NotImplementedError

    def bounding_box(self):
        raise NotImplementedError

    def boundary_points(self, spacing: float) -> np.ndarray:
        """Boundary nodes equispaced in arc length, spacing at most ``spacing``."""
        m = max(3, math.ceil(self.perimeter / spacing - 1e-12))
        ds = self.perimeter / m
        return np.array([self.boundary_point(j * ds) for j in range(m)])


@dataclass(frozen=True)
class Disk(ConvexDomain):
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    kind = "disk"

    def contains(self, p) -> bool:
        return math.hypot(p[0] - self.center[0], p[1] - self.center[1]) <= self.radius

    def distance_to_boundary(self, p) -> float:
        return self.radius - math.hypot(p[0] - self.center[0], p[1] - self.center[1])

    @property
    def perimeter(self) -> float:
        return 2.0 * math.pi * self.radius

    def boundary_point(self, s: float):
        th = s / self.radius
        return (self.center[0] + self.radius * math.cos(th),
                self.center[1] + self.radius * math.sin(th))

    @property
    def curvature_radius(self) -> float:
        return self.radius

    @property
    def enclosing_radius(self) -> float:
        return math.hypot(*self.center) + self.radius

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def bounding_box(self):
        cx, cy = self.center
        r = self.radius
        return cx - r, cx + r, cy - r, cy + r


@dataclass(frozen=True)
class Ellipse(ConvexDomain):
    """Axis-aligned ellipse with semi-axes ``a`` (x) and ``b`` (y)."""

    center: tuple = (0.0, 0.0)
    a: float = 1.0
    b: float = 0.5
    kind = "ellipse"

    def _local(self, p):
        return p[0] - self.center[0], p[1] - self.center[1]

    def contains(self, p) -> bool:
        x, y = self._local(p)
        return (x / self.a) ** 2 + (y / self.b) ** 2 <= 1.0

    def _speed(self, th):
        return math.hypot(self.a * math.sin(th), self.b * math.cos(th))

    def distance_to_boundary(self, p) -> float:
        x, y = self._local(p)

        def d2(th):
            return (x - self.a * math.cos(th)) ** 2 + (y - self.b * math.sin(th)) ** 2

        def dd(th):  # half the derivative of d2; zero at the foot point
            return (x - self.a * math.cos(th)) * self.a * math.sin(th) \
                - (y - self.b * math.sin(th)) * self.b * math.cos(th)

        grid = np.linspace(0.0, 2.0 * math.pi, 257)
        k = int(np.argmin([d2(t) for t in grid]))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, 256)]
        best = d2(grid[k])
        if dd(lo) * dd(hi) < 0:
            best = min(best, d2(optimize.brentq(dd, lo, hi, xtol=1e-15)))
        else:
            res = optimize.minimize_scalar(d2, bounds=(lo, hi), method="bounded",
                                           options={"xatol": 1e-13})
            best = min(best, res.fun)
        d = math.sqrt(best)
        return d if self.contains(p) else -d

    @cached_property
    def perimeter(self) -> float:
        return self._arc(2.0 * math.pi)

    def _arc(self, th: float) -> float:
        val, _ = integrate.quad(self._speed, 0.0, th, epsabs=1e-13, epsrel=1e-12, limit=200)
        return val

    def boundary_point(self, s: float):
        s = s % self.perimeter
        if s == 0.0:
            th = 0.0
        else:
            th = optimize.brentq(lambda t: self._arc(t) - s, 0.0, 2.0 * math.pi, xtol=1e-14)
        return (self.center[0] + self.a * math.cos(th), self.center[1] + self.b * math.sin(th))

    @property
    def curvature_radius(self) -> float:
        big, small = max(self.a, self.b), min(self.a, self.b)
        return big * big / small

    @property
    def enclosing_radius(self) -> float:
        return math.hypot(*self.center) + max(self.a, self.b)

    @property
    def diameter(self) -> float:
        return 2.0 * max(self.a, self.b)

    def bounding_box(self):
        cx, cy = self.center
        return cx - self.a, cx + self.a, cy - self.b, cy + self.b


# --------------------------------------------------------------------------
# node sets


def shape_constant(p0, p1, p2) -> float:
    """``sigma_T = diam(T) / (diameter of the inscribed ball)``."""
    a = math.dist(p1, p2)
    b = math.dist(p0, p2)
    c = math.dist(p0, p1)
    area = 0.5 * abs((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]))
    inradius = 2.0 * area / (a + b + c)
    return max(a, b, c) / (2.0 * inradius)


def lattice_sigma(basis) -> float:
    """Shape constant of the translation-invariant Delaunay cells of a lattice."""
    e1, e2 = np.asarray(basis[0], float), np.asarray(basis[1], float)
    pts = [tuple(i * e1 + j * e2) for i in range(-3, 4) for j in range(-3, 4)]
    origin = pts.index((0.0, 0.0))
    tri = RegularTriangulation(pts, [0.0] * len(pts))
    cells = [t for t in tri.triangles() if origin in t]
    return max(shape_constant(*(pts[v] for v in t)) for t in cells)


@dataclass(frozen=True, eq=False)
class NodeSet:
    """Interior nodes (indices ``0..n-1``) followed by boundary nodes.

    ``lattice`` holds the integer coordinates ``(k1, k2)`` of interior nodes
    when they come from a lattice; ``sigma`` is the shape constant of the
    translation-invariant Delaunay cells.
    """

    points: np.ndarray
    n_interior: int
    h: float
    basis: tuple = ((1.0, 0.0), (0.0, 1.0))
    clearance: float = 0.0
    sigma: float = float("nan")
    domain: ConvexDomain | None = None
    lattice: np.ndarray | None = None

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("points must have shape (N, 2)")
        if not np.all(np.isfinite(pts)):
            raise ValueError("node coordinates must be finite")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.n_interior

    @property
    def N(self) -> int:
        return len(self.points)

    @property
    def interior(self) -> np.ndarray:
        return self.points[: self.n_interior]

    @property
    def boundary(self) -> np.ndarray:
        return self.points[self.n_interior:]

    def is_interior(self, i: int) -> bool:
        return 0 <= i < self.n_interior

    @cached_property
    def point_list(self):
        return [tuple(p) for p in self.points.tolist()]

    @cached_property
    def base_mesh(self) -> "BaseMesh":
        return delaunay(self)

    def nodal(self, fn: Callable) -> np.ndarray:
        """Nodal function ``N_h u``: ``fn`` evaluated at every node."""
        return np.asarray(fn(self.points), dtype=float).reshape(self.N)


def _canonical_basis(basis):
    if basis is None:
        basis = ((1.0, 0.0), (0.0, 1.0))
    e1 = tuple(float(v) for v in basis[0])
    e2 = tuple(float(v) for v in basis[1])
    if abs(e1[0] * e2[1] - e1[1] * e2[0]) < 1e-14:
        raise ValueError("basis vectors are linearly dependent")
    if math.hypot(*e1) > 1.0 + 1e-12 or math.hypot(*e2) > 1.0 + 1e-12:
        raise ValueError("basis vectors must have length at most 1")
    return e1, e2


_GRID = 2.0**-40


def _snap(v: float) -> float:
    return round(v / _GRID) * _GRID


def _generators(h, e1, e2):
    """``h e1`` and ``h e2`` rounded to multiples of ``2^-40``.

    Lattice points ``k1 g1 + k2 g2`` are then computed without rounding, so
    lattice points that are collinear in exact arithmetic stay collinear in
    floating point and the exact predicates see the true degeneracies.
    """
    return ((_snap(h * e1[0]), _snap(h * e1[1])), (_snap(h * e2[0]), _snap(h * e2[1])))


def generate_nodes(domain: ConvexDomain, h: float, basis=None, clearance: float = 0.45,
                   boundary_spacing: float | None = None) -> NodeSet:
    """Lattice nodes ``h (k1 e1 + k2 e2)`` inside ``domain`` plus boundary nodes.

    Interior nodes closer than ``clearance * h`` to the boundary are dropped.
    Boundary nodes are equispaced in arc length with spacing at most
    ``boundary_spacing`` (default ``h / 2``).  Interior nodes are ordered
    lexicographically by lattice index.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if h > domain.diameter / 4.0:
        raise EmptyInteriorError(
            f"h={h} exceeds a quarter of the domain diameter ({domain.diameter})")
    e1, e2 = _canonical_basis(basis)
    g1, g2 = _generators(h, e1, e2)
    B = np.array([g1, g2]).T  # columns h e1, h e2
    Binv = np.linalg.inv(B)
    x0, x1, y0, y1 = domain.bounding_box()
    corners = Binv @ np.array([[x0, x0, x1, x1], [y0, y1, y0, y1]])
    k1lo, k2lo = np.floor(corners.min(axis=1)).astype(int) - 1
    k1hi, k2hi = np.ceil(corners.max(axis=1)).astype(int) + 1
    interior, ks = [], []
    for k1 in range(k1lo, k1hi + 1):
        for k2 in range(k2lo, k2hi + 1):
            p = (k1 * g1[0] + k2 * g2[0], k1 * g1[1] + k2 * g2[1])
            if domain.contains(p) and domain.distance_to_boundary(p) > clearance * h:
                interior.append(p)
                ks.append((k1, k2))
    if not interior:
        raise EmptyInteriorError("no lattice node survives the clearance band")
    spacing = h / 2.0 if boundary_spacing is None else boundary_spacing
    bnd = domain.boundary_points(spacing)
    pts = np.vstack([np.array(interior), bnd])
    return NodeSet(points=pts, n_interior=len(interior), h=float(h), basis=(e1, e2),
                   clearance=float(clearance), sigma=lattice_sigma((e1, e2)), domain=domain,
                   lattice=np.array(ks, dtype=int))


def lattice_patch(m: int, h: float = 1.0, basis=None, center=(0.0, 0.0)) -> NodeSet:
    """``m x m`` lattice patch centred at ``center``; the outer ring is the
    boundary.  ``m`` must be odd so the centre is a lattice node."""
    if m < 3 or m % 2 == 0:
        raise ValueError("m must be an odd integer >= 3")
    e1, e2 = _canonical_basis(basis)
    g1, g2 = _generators(h, e1, e2)
    cx, cy = _snap(float(center[0])), _snap(float(center[1]))
    r = m // 2
    inner, ring, ks = [], [], []
    for k1 in range(-r, r + 1):
        for k2 in range(-r, r + 1):
            p = (cx + k1 * g1[0] + k2 * g2[0], cy + k1 * g1[1] + k2 * g2[1])
            if max(abs(k1), abs(k2)) == r:
                ring.append(p)
            else:
                inner.append(p)
                ks.append((k1, k2))
    return NodeSet(points=np.array(inner + ring), n_interior=len(inner), h=float(h),
                   basis=(e1, e2), sigma=lattice_sigma((e1, e2)), lattice=np.array(ks, dtype=int))


# --------------------------------------------------------------------------
# base mesh


@dataclass(frozen=True, eq=False)
class BaseMesh:
    """Delaunay triangulation ``T_h^0`` with per-node stars and hat integrals."""

    nodes: NodeSet
    triangles: np.ndarray
    stars: list = field(repr=False)
    hat_integrals: np.ndarray = field(repr=False)

    @property
    def m(self) -> np.ndarray:
        return self.hat_integrals

    @cached_property
    def sigma(self) -> float:
        """Largest element shape constant over the whole mesh."""
        P = self.nodes.points
        return max(shape_constant(*P[list(t)]) for t in self.triangles)

    def local_spacing(self) -> np.ndarray:
        """``h_i``: largest diameter of an element containing node ``i``."""
        P = self.nodes.points
        out = np.zeros(self.nodes.N)
        for t in self.triangles:
            a, b, c = P[t]
            d = max(np.linalg.norm(a - b), np.linalg.norm(b - c), np.linalg.norm(a - c))
            out[t] = np.maximum(out[t], d)
        return out

    def areas(self) -> np.ndarray:
        P = self.nodes.points
        T = self.triangles
        a, b, c = P[T[:, 0]], P[T[:, 1]], P[T[:, 2]]
        return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                      - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def _scipy_base(pts):
    """Candidate triangulation from Qhull, or None if it fails exact checks."""
    from scipy.spatial import Delaunay as QhullDelaunay

    try:
        tri = QhullDelaunay(np.asarray(pts))
    except Exception:
        return None
    simplices = tri.simplices.tolist()
    used = {v for s in simplices for v in s}
    if len(used) != len(pts):
        return None
    out = []
    edges = {}
    for a, b, c in simplices:
        o = orient2d(pts[a], pts[b], pts[c])
        if o == 0:
            return None
        if o < 0:
            b, c = c, b
        out.append((a, b, c))
        for e in ((a, b), (b, c), (c, a)):
            if e in edges:
                return None
            edges[e] = True
    bnd = {e[0]: e[1] for e in edges if (e[1], e[0]) not in edges}
    if len(bnd) != sum(1 for e in edges if (e[1], e[0]) not in edges):
        return None
    # boundary must be a single convex counterclockwise cycle
    start = next(iter(bnd))
    cyc = [start]
    while True:
        nxt = bnd.get(cyc[-1])
        if nxt is None:
            return None
        if nxt == start:
            break
        cyc.append(nxt)
        if len(cyc) > len(bnd):
            return None
    if len(cyc) != len(bnd):
        return None
    m = len(cyc)
    if any(orient2d(pts[cyc[k - 1]], pts[cyc[k]], pts[cyc[(k + 1) % m]]) < 0 for k in range(m)):
        return None
    if len(out) != 2 * len(pts) - 2 - m:
        return None
    return out


def delaunay(nodes: NodeSet) -> BaseMesh:
    """Delaunay triangulation of all nodes, decided by exact predicates.

    Cocircular ties are broken by node index (lowest index first), so the
    result is deterministic.
    """
    pts = nodes.point_list
    if len(pts) < 3:
        raise CollinearNodesError("need at least three nodes")
    base = _scipy_base(pts) if len(pts) > 200 else None
    if base is None:
        base = sweep_triangulation(pts)
    tri = RegularTriangulation(pts, [0.0] * len(pts), base=base)
    T = np.array(sorted(tuple(t) for t in tri.triangles()), dtype=int)
    stars: list = [[] for _ in range(len(pts))]
    for k, t in enumerate(T):
        for v in t:
            stars[v].append(k)
    P = nodes.points
    a, b, c = P[T[:, 0]], P[T[:, 1]], P[T[:, 2]]
    area = 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
    m = np.zeros(len(pts))
    for j in range(3):
        np.add.at(m, T[:, j], area / 3.0)
    return BaseMesh(nodes=nodes, triangles=T, stars=stars, hat_integrals=m)


# --------------------------------------------------------------------------
# right-hand side

# symmetric triangle rules: (barycentric orbit, weight); weights sum to one
_ORBIT_RULES = {
    2: [((2 / 3, 1 / 6, 1 / 6), 1 / 3)],
    4: [((0.108103018168070, 0.445948490915965, 0.445948490915965), 0.223381589678011),
        ((0.816847572980459, 0.091576213509771, 0.091576213509771), 0.109951743655322)],
    6: [((0.501426509658179, 0.249286745170910, 0.249286745170910), 0.116786275726379),
        ((0.873821971016996, 0.063089014491502, 0.063089014491502), 0.050844906370207),
        ((0.053145049844817, 0.310352451033784, 0.636502499121399), 0.082851075618374)],
}


def quadrature_rule(order: int):
    """Barycentric points ``(q, 3)`` and weights ``(q,)`` of the symmetric rule
    exact for polynomials of degree ``order``."""
    if order not in _ORBIT_RULES:
        raise ValueError("quad_order must be 2, 4 or 6")
    pts, wts = [], []
    for orbit, w in _ORBIT_RULES[order]:
        perms = sorted(set(permutations(orbit)))
        pts += perms
        wts += [w] * len(perms)
    return np.array(pts), np.array(wts)


@dataclass(frozen=True, eq=False)
class RhsVector:
    """``f_i`` per interior node."""

    values: np.ndarray
    kind: str = "density"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(v < 0):
            raise ValueError("right-hand side entries must be nonnegative")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


def assemble_rhs(mesh: BaseMesh, f: Callable, quad_order: int = 4) -> RhsVector:
    """``f_i = int f phi_i`` by symmetric quadrature on every star triangle.

    ``f`` maps an ``(M, 2)`` array of points to ``M`` values.
    """
    bary, w = quadrature_rule(quad_order)
    P = mesh.nodes.points
    T = mesh.triangles
    X = np.einsum("qj,tjd->tqd", bary, P[T])  # (nt, q, 2)
    vals = np.asarray(f(X.reshape(-1, 2)), dtype=float).reshape(X.shape[:2])
    if np.any(vals < 0):
        raise NegativeDensityError("density is negative at a quadrature point")
    area = np.abs(mesh.areas())
    out = np.zeros(mesh.nodes.N)
    for j in range(3):
        contrib = area * (vals * bary[None, :, j] * w[None, :]).sum(axis=1)
        np.add.at(out, T[:, j], contrib)
    return RhsVector(out[: mesh.nodes.n], kind="density")


def assemble_rhs_dirac(nodes: NodeSet, masses: Sequence) -> RhsVector:
    """Assign each point mass ``(location, weight)`` to the nearest interior
    node (ties to the lowest index)."""
    out = np.zeros(nodes.n)
    inner = nodes.interior
    for loc, weight in masses:
        if weight <= 0:
            raise ValueError("point-mass weights must be positive")
        if nodes.domain is not None and not nodes.domain.contains(loc):
            raise OutsideDomainError(f"point mass at {tuple(loc)} lies outside the domain")
        d2 = ((inner - np.asarray(loc, float)) ** 2).sum(axis=1)
        out[int(np.argmin(d2))] += weight
    return RhsVector(out, kind="point-mass")


# --------------------------------------------------------------------------
# text format


def write_mesh(path, nodes: NodeSet, triangles=None) -> None:
    """Header ``n N h``, one ``index x y kind`` line per node, then triangles."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{nodes.n} {nodes.N} {nodes.h!r}\n")
        for i, (x, y) in enumerate(nodes.points):
            kind = "interior" if i < nodes.n else "boundary"
            fh.write(f"{i} {x:.17g} {y:.17g} {kind}\n")
        if triangles is not None:
            for a, b, c in np.asarray(triangles).tolist():
                fh.write(f"{a} {b} {c}\n")


def read_mesh(path):
    """Inverse of :func:`write_mesh`: ``(NodeSet, triangles or None)``."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    n, N, h = int(lines[0][0]), int(lines[0][1]), float(lines[0][2])
    pts = np.zeros((N, 2))
    for row in lines[1: N + 1]:
        i = int(row[0])
        pts[i] = float(row[1]), float(row[2])
        if (row[3] == "interior") != (i < n):
            raise ValueError(f"node {i} has inconsistent kind {row[3]!r}")
    tris = [tuple(int(v) for v in row) for row in lines[N + 1:]]
    nodes = NodeSet(points=pts, n_interior=n, h=h)
    return nodes, (np.array(tris, dtype=int) if tris else None)
