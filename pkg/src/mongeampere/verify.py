"""Property suites behind ``mongeampere verify``.

Every suite is a function ``suite(seed, fault=None) -> SuiteResult``.  The
subdifferential suites work on integer lattice patches with dyadic nodal
values and decide containment in exact integer arithmetic, so a failure is
a real violation and never a rounding artefact.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .domain import Disk, generate_nodes, lattice_patch
from .envelope import EnvelopeMesh
from .geom import _ints, ConvexPolygon, convex_hull, lift_facet_sign, minkowski_sum, polygon_area
from .problems import NoQualifiedNodeError, consistency_check
from .solver import default_tol_t, solve_nodal

__all__ = [
    "FAULTS",
    "SUITES",
    "SuiteResult",
    "alexandroff_suite",
    "adjacency_suite",
    "brunn_minkowski_suite",
    "envelope_certificate_suite",
    "exact_subdifferential",
    "hull_contains",
    "maximum_principle_suite",
    "monotonicity_suite",
    "quadratic_exactness_suite",
    "run_suites",
    "sum_rule_suite",
]

FAULTS = ("skip-legalization",)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    cases: int
    failures: int = 0
    worst: float = 0.0
    detail: str = ""
    seconds: float = 0.0
    examples: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"suite": self.name, "passed": bool(self.passed), "cases": int(self.cases),
                "failures": int(self.failures), "worst": float(self.worst),
                "detail": self.detail, "seconds": float(self.seconds)}


# --------------------------------------------------------------------------
# exact polygons


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _exact_hull(points):
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _in_hull(hull, x) -> bool:
    n = len(hull)
    if n == 0:
        return False
    if n == 1:
        return hull[0] == x
    if n == 2:
        a, b = hull
        return (_cross(a, b, x) == 0 and min(a[0], b[0]) <= x[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= x[1] <= max(a[1], b[1]))
    return all(_cross(hull[k], hull[(k + 1) % n], x) >= 0 for k in range(n))


def hull_contains(outer, inner) -> bool:
    """Closed containment of exact polygon ``inner`` in ``outer``."""
    return all(_in_hull(outer, x) for x in inner)


class _Exact:
    """Integer images of the subdifferentials of one or more meshes.

    Coordinates and values are scaled to integers by common powers of two
    and every gradient is multiplied by the lcm of all triangle
    determinants, so the gradients of all the meshes become integer points
    under one positive linear scale.  Containment is invariant under it.
    """

    def __init__(self, *meshes: EnvelopeMesh):
        self.meshes = meshes
        xs = _ints(*[c for m in meshes for p in m.tri.pts for c in p])
        us = _ints(*[v for m in meshes for v in m.tri.h])
        raw, k0, j0 = [], 0, 0
        for m in meshes:
            N = len(m.tri.pts)
            X = xs[k0:k0 + 2 * N]
            U = us[j0:j0 + N]
            k0 += 2 * N
            j0 += N
            grads = {}
            for tri in m.triangles():
                a, b, c = tri
                ax, ay, bx, by, cx, cy = (X[2 * a], X[2 * a + 1], X[2 * b], X[2 * b + 1],
                                          X[2 * c], X[2 * c + 1])
                ua, ub, uc = U[a], U[b], U[c]
                det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
                nx = (ub - ua) * (cy - ay) - (uc - ua) * (by - ay)
                ny = (uc - ua) * (bx - ax) - (ub - ua) * (cx - ax)
                grads[tri] = (nx, ny, det)
            raw.append(grads)
        L = math.lcm(*[abs(g[2]) for grads in raw for g in grads.values()] or [1])
        self.grads = [{t: (nx * (L // d), ny * (L // d)) for t, (nx, ny, d) in grads.items()}
                      for grads in raw]

    def subdiff(self, i: int, k: int = 0):
        m, g = self.meshes[k], self.grads[k]
        return _exact_hull([g[t] for t in m.star_triangles(i)])


def exact_subdifferential(mesh: EnvelopeMesh, i: int):
    """Subdifferential at ``x_i`` as an exact hull of integer points.

    The points are the envelope gradients under a positive scale common to
    the whole mesh (see :class:`_Exact`); the topology comes from the exact
    predicates.
    """
    return _Exact(mesh).subdiff(i)


def _exact_minkowski(p, q):
    if not p or not q:
        return []
    return _exact_hull([(a[0] + b[0], a[1] + b[1]) for a in p for b in q])


# --------------------------------------------------------------------------
# random data


def _random_convex_values(rng, P, pieces=None, scale=8):
    """Max of random dyadic affine functions plus a random integer multiple
    of ``|x|^2``; exact in floating point on integer points."""
    k = int(rng.integers(2, 9)) if pieces is None else pieces
    A = rng.integers(-scale, scale + 1, size=(k, 2)) / 4.0
    c = rng.integers(-scale, scale + 1, size=k) / 4.0
    u = np.max(P @ A.T + c, axis=1)
    u = u + int(rng.integers(0, 3)) * (P ** 2).sum(axis=1) / 8.0
    return u


def _random_polygon(rng, k=None):
    k = int(rng.integers(1, 9)) if k is None else k
    pts = rng.normal(size=(k, 2)) * rng.uniform(0.1, 3.0)
    return convex_hull(pts.tolist())


# --------------------------------------------------------------------------
# suites


def brunn_minkowski_suite(seed: int = 0, fault=None, pairs: int = 10_000,
                          tol: float = 1e-12) -> SuiteResult:
    """``sqrt|A+B| >= sqrt|A| + sqrt|B|``; equality for homothetic pairs."""
    rng = np.random.default_rng(seed)
    worst_slack, worst_eq, bad = math.inf, 0.0, 0
    for k in range(pairs):
        # homothetic pairs use full-dimensional polygons: for a segment the
        # computed sum area is rounding noise and its square root is not small
        A = _random_polygon(rng) if k % 2 == 0 else _random_polygon(rng, int(rng.integers(3, 9)))
        while k % 2 and len(A) < 3:
            A = _random_polygon(rng, 5)
        if k % 2:
            t = rng.uniform(0.1, 3.0)
            v = rng.normal(size=2)
            B = ConvexPolygon(tuple((t * x + v[0], t * y + v[1]) for x, y in A.vertices))
        else:
            B = _random_polygon(rng)
        a, b = polygon_area(A), polygon_area(B)
        s = polygon_area(minkowski_sum(A, B))
        slack = math.sqrt(s) - math.sqrt(a) - math.sqrt(b)
        worst_slack = min(worst_slack, slack)
        if slack < -tol:
            bad += 1
        if k % 2:
            gap = abs(slack)
            worst_eq = max(worst_eq, gap)
            if gap > tol:
                bad += 1
    return SuiteResult("brunn-minkowski", bad == 0, pairs, bad, worst_slack,
                       f"min slack {worst_slack:.3g}, max homothetic gap {worst_eq:.3g}")


def monotonicity_suite(seed: int = 0, fault=None, instances: int = 1000) -> SuiteResult:
    """Lowering ``u_i`` grows the subdifferential at ``x_i`` and shrinks it
    at every other interior node."""
    rng = np.random.default_rng(seed)
    nodes = lattice_patch(7)
    P = nodes.points
    bad = 0
    for _ in range(instances):
        v = _random_convex_values(rng, P)
        i = int(rng.integers(nodes.n))
        u = v.copy()
        u[i] -= int(rng.integers(1, 9)) / 8.0
        ex = _Exact(EnvelopeMesh(nodes, v), EnvelopeMesh(nodes, u))
        ok = hull_contains(ex.subdiff(i, 1), ex.subdiff(i, 0))
        for j in range(nodes.n):
            if j != i and ok:
                ok = hull_contains(ex.subdiff(j, 0), ex.subdiff(j, 1))
        bad += not ok
    return SuiteResult("monotonicity", bad == 0, instances, bad)


def sum_rule_suite(seed: int = 0, fault=None, instances: int = 1000) -> SuiteResult:
    """``dw(x_i) + dv(x_i)`` is contained in ``d(w + v)(x_i)``."""
    rng = np.random.default_rng(seed)
    nodes = lattice_patch(7)
    P = nodes.points
    bad = 0
    for _ in range(instances):
        w = _random_convex_values(rng, P)
        v = _random_convex_values(rng, P)
        ex = _Exact(EnvelopeMesh(nodes, w), EnvelopeMesh(nodes, v), EnvelopeMesh(nodes, w + v))
        i = int(rng.integers(nodes.n))
        lhs = _exact_minkowski(ex.subdiff(i, 0), ex.subdiff(i, 1))
        bad += not hull_contains(ex.subdiff(i, 2), lhs)
    return SuiteResult("sum-rule", bad == 0, instances, bad)


def _random_spd(rng, max_ratio=4.0):
    th = rng.uniform(0, np.pi)
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    lam = rng.uniform(0.5, 2.0)
    return R @ np.diag([lam, lam * rng.uniform(1.0, max_ratio)]) @ R.T


def adjacency_suite(seed: int = 0, fault=None, instances: int = 50) -> SuiteResult:
    """Neighbours of ``x_i`` in the mesh of a convex quadratic lie within
    ``R h`` of ``x_i``, ``R = (Lambda / lambda) sigma^2``."""
    rng = np.random.default_rng(seed)
    worst, bad = 0.0, 0
    for _ in range(instances):
        Q = _random_spd(rng, 3.0)
        ev = np.linalg.eigvalsh(Q)
        nodes = lattice_patch(15, h=float(rng.choice([0.5, 1.0])))
        R = ev[-1] / ev[0] * nodes.sigma ** 2
        P = nodes.points
        mesh = EnvelopeMesh(nodes, 0.5 * np.einsum("ij,jk,ik->i", P, Q, P))
        far = np.abs(P[: nodes.n]).max(axis=1) <= nodes.h * (7 - R)
        for i in np.flatnonzero(far):
            d = max(np.hypot(*(P[j] - P[i])) for j in mesh.neighbors(int(i))) / (R * nodes.h)
            worst = max(worst, d)
            bad += d > 1.0 + 1e-12
    return SuiteResult("adjacency-bound", bad == 0, instances, bad, worst,
                       f"max |x_j - x_i| / (R h) = {worst:.3f}")


def quadratic_exactness_suite(seed: int = 0, fault=None, instances: int = 12,
                              tol: float = 1e-10) -> SuiteResult:
    """``|dp_h(x_i)| = det(Q) m_i`` at qualified nodes, relative error."""
    rng = np.random.default_rng(seed)
    hexb = ((1.0, 0.0), (0.5, math.sqrt(3) / 2))
    worst, bad, ran = 0.0, 0, 0
    for k in range(instances):
        Q = _random_spd(rng, 2.0)
        nodes = generate_nodes(Disk((0.0, 0.0), 1.0), 0.05, basis=hexb if k % 2 else None)
        try:
            dev = consistency_check(nodes, None, Q, relative=True)
        except NoQualifiedNodeError:
            continue
        ran += 1
        worst = max(worst, dev)
        bad += dev > tol
    return SuiteResult("quadratic-exactness", bad == 0 and ran > 0, ran, bad, worst,
                       f"max relative deviation {worst:.3g}")


def maximum_principle_suite(seed: int = 0, fault=None, instances: int = 3) -> SuiteResult:
    """``f1 <= f2`` nodewise gives ``u1 >= u2`` nodewise."""
    rng = np.random.default_rng(seed)
    nodes = generate_nodes(Disk((0.0, 0.0), 1.0), 0.2)
    m = nodes.base_mesh.m[: nodes.n]
    worst, bad = -math.inf, 0
    for _ in range(instances):
        f1 = m * rng.uniform(0.5, 1.5, size=nodes.n)
        f2 = f1 * (1.0 + rng.uniform(0.0, 1.0, size=nodes.n))
        u1, _, _ = solve_nodal(nodes, f1)
        u2, _, _ = solve_nodal(nodes, f2)
        tol = 10.0 * max(default_tol_t(u1), default_tol_t(u2))
        d = float(np.max(u2 - u1))
        worst = max(worst, d)
        bad += d > tol
    return SuiteResult("maximum-principle", bad == 0, instances, bad, worst,
                       f"max (u2 - u1) = {worst:.3g}")


def envelope_certificate_suite(seed: int = 0, fault=None, instances: int = 20) -> SuiteResult:
    """Every interior edge has a nonnegative jump and no node lies below any
    facet plane (exact lifted-point test)."""
    rng = np.random.default_rng(seed)
    nodes = generate_nodes(Disk((0.0, 0.0), 1.0), 0.25)
    P = nodes.points
    pts = nodes.point_list
    legal = fault != "skip-legalization"
    worst, bad = math.inf, 0
    for _ in range(instances):
        Q = _random_spd(rng, 6.0)
        u = 0.5 * np.einsum("ij,jk,ik->i", P, Q, P) + 0.3 * rng.normal(size=nodes.N) ** 2
        mesh = EnvelopeMesh(nodes, u, legalize=legal)
        h = mesh.tri.h
        ok = True
        for p, q in mesh.interior_edges():
            j = mesh.jump(p, q)
            worst = min(worst, j)
            if j < 0:
                ok = False
        for a, b, c in mesh.triangles():
            for d in range(nodes.N):
                if d in (a, b, c):
                    continue
                if lift_facet_sign(pts[a], pts[b], pts[c], pts[d], h[a], h[b], h[c], h[d]) > 0:
                    ok = False
                    break
            if not ok:
                break
        bad += not ok
    msg = f"min jump {worst:.3g}"
    if bad:
        msg += " (negative jump found)" if worst < 0 else " (node below a facet)"
    return SuiteResult("envelope-certificate", bad == 0, instances, bad, worst, msg)


def alexandroff_suite(seed: int = 0, fault=None, instances: int = 100,
                      tol: float = 1e-12) -> SuiteResult:
    """Nonnegative boundary data and zero contact measure force ``v >= 0``.

    Interior values are the envelope of the boundary data raised by a
    random nonnegative amount (zero at about half the nodes), so the contact
    nodes sit on the flat envelope and carry no measure.
    """
    rng = np.random.default_rng(seed)
    nodes = generate_nodes(Disk((0.0, 0.0), 1.0), 0.2)
    n, P = nodes.n, nodes.points
    worst, mass, bad = math.inf, 0.0, 0
    for _ in range(instances):
        v = np.zeros(nodes.N)
        v[n:] = rng.uniform(0.0, 1.0, size=nodes.N - n) ** 3
        v[:n] = 1e6  # far above: out of contact
        base = EnvelopeMesh(nodes, v)
        v[:n] = [base.evaluate(P[i]) for i in range(n)]
        raise_ = rng.uniform(0.0, 0.5, size=n) * (rng.uniform(size=n) < 0.5)
        v[:n] += raise_
        mesh = EnvelopeMesh(nodes, v)
        total = sum(polygon_area(convex_hull(mesh.star_gradients(i))) for i in mesh.contact_set())
        mass = max(mass, total)
        lo = float(v.min())
        worst = min(worst, lo)
        bad += lo < -tol or total > 1e-12
    return SuiteResult("alexandroff", bad == 0, instances, bad, worst,
                       f"min value {worst:.3g}, max contact measure {mass:.3g}")


SUITES = {
    "brunn-minkowski": brunn_minkowski_suite,
    "monotonicity": monotonicity_suite,
    "sum-rule": sum_rule_suite,
    "adjacency-bound": adjacency_suite,
    "quadratic-exactness": quadratic_exactness_suite,
    "maximum-principle": maximum_principle_suite,
    "envelope-certificate": envelope_certificate_suite,
    "alexandroff": alexandroff_suite,
}


def run_suites(seed: int = 0, names=None, fault=None, quick: bool = False) -> list:
    """Run the named suites (all by default).  ``quick`` trims case counts."""
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; choose from {FAULTS}")
    names = list(SUITES) if names is None else list(names)
    small = {"brunn-minkowski": {"pairs": 1000}, "monotonicity": {"instances": 50},
             "sum-rule": {"instances": 100}, "adjacency-bound": {"instances": 10},
             "quadratic-exactness": {"instances": 4}, "maximum-principle": {"instances": 1},
             "envelope-certificate": {"instances": 5}, "alexandroff": {"instances": 20}}
    out = []
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}")
        t0 = time.perf_counter()
        res = SUITES[name](seed=seed, fault=fault, **(small[name] if quick else {}))
        res.seconds = time.perf_counter() - t0
        out.append(res)
    return out
