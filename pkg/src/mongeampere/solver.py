"""Monotone Perron iteration for the discrete Monge-Ampere equation.

The discrete problem asks for a convex nodal function whose subdifferential
area at every interior node equals ``f_i``.  The iteration starts from a
subsolution (areas at least ``f_i``) and raises one node at a time to the
largest value at which its area still matches ``f_i``.

A damped Newton iteration on the square roots of the areas can be used as a
warm start; its output is turned back into a verified subsolution before the
Perron sweeps take over, so the fixed point and the stopping test are those
of the monotone iteration.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .domain import NodeSet, RhsVector
from .envelope import EnvelopeMesh
from .geom import orient2d

log = logging.getLogger(__name__)

__all__ = [
    "BracketError",
    "MaxSweepsExceeded",
    "SolveReport",
    "SubsolutionError",
    "default_tol_t",
    "init_subsolution",
    "nodal_areas",
    "nodal_solve",
    "newton_warm_start",
    "solve",
    "solve_nodal",
    "sweep",
]


class BracketError(RuntimeError):
    """Area below ``f_i`` before a nodal solve; the iterate is not a subsolution."""


class SubsolutionError(RuntimeError):
    """Doubling of the paraboloid curvature did not produce a subsolution."""


class MaxSweepsExceeded(RuntimeError):
    def __init__(self, msg, report=None, values=None, mesh=None):
        super().__init__(msg)
        self.report = report
        self.values = values
        self.mesh = mesh


@dataclass
class SolveReport:
    sweeps: int = 0
    final_residual: float = float("inf")
    value_change_history: list = field(default_factory=list)
    flip_count: int = 0
    wall_time: float = 0.0
    converged: bool = False
    newton_iterations: int = 0

    def as_dict(self) -> dict:
        return {
            "sweeps": self.sweeps,
            "final_residual": self.final_residual,
            "value_change_history": list(self.value_change_history),
            "flip_count": self.flip_count,
            "wall_time": self.wall_time,
            "converged": self.converged,
            "newton_iterations": self.newton_iterations,
        }


def _rhs_values(rhs) -> np.ndarray:
    return rhs.values if isinstance(rhs, RhsVector) else np.asarray(rhs, dtype=float)


def default_tol_t(u) -> float:
    return 1e-12 * (1.0 + float(np.max(np.abs(u))))


# --------------------------------------------------------------------------
# star geometry


def _tri_grad(P, u, a, b, c):
    (ax, ay), (bx, by), (cx, cy) = P[a], P[b], P[c]
    ua = u[a]
    db, dc = u[b] - ua, u[c] - ua
    det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return ((db * (cy - ay) - dc * (by - ay)) / det,
            (dc * (bx - ax) - db * (cx - ax)) / det)


def _star(mesh: EnvelopeMesh, i: int):
    """Rim vertices ``a_k`` with triangles ``(i, a_k, a_{k+1})``, plus for each
    triangle the gradient with ``u_i`` frozen and the hat gradient of node i."""
    tri = mesh.tri
    ts, closed = tri.star(i)
    if not ts or not closed:
        return None
    P, u = tri.pts, tri.h
    xi, yi = P[i]
    rim, g, q = [], [], []
    for t in ts:
        v = tri.tv[t]
        k = v.index(i)
        a, b = v[(k + 1) % 3], v[(k + 2) % 3]
        rim.append(a)
        g.append(_tri_grad(P, u, i, a, b))
        (ax, ay), (bx, by) = P[a], P[b]
        det = (ax - xi) * (by - yi) - (ay - yi) * (bx - xi)
        q.append((-(by - ay) / det, (bx - ax) / det))
    return rim, g, q


def _poly_area(g) -> float:
    m = len(g)
    if m < 3:
        return 0.0
    cx, cy = g[0]
    s = 0.0
    for k in range(1, m - 1):
        x0, y0 = g[k][0] - cx, g[k][1] - cy
        x1, y1 = g[k + 1][0] - cx, g[k + 1][1] - cy
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def _star_model(mesh: EnvelopeMesh, i: int):
    """Area and spoke jumps of the current star as functions of ``d``, the
    increment of ``u_i``.

    Returns ``(a0, a1, a2, kink, degree)``: area ``a0 + a1 d + a2 d^2`` valid
    for ``0 <= d <= kink``, where ``kink`` is the first increment at which a
    spoke jump vanishes.
    """
    data = _star(mesh, i)
    if data is None:
        return None
    rim, g, q = data
    m = len(rim)
    cx, cy = g[0]
    a0 = a1 = a2 = 0.0
    for k in range(m):
        k1 = (k + 1) % m
        px, py = g[k][0] - cx, g[k][1] - cy
        rx, ry = g[k1][0] - cx, g[k1][1] - cy
        qx, qy = q[k]
        sx, sy = q[k1]
        a0 += px * ry - rx * py
        a1 += px * sy - sx * py + qx * ry - rx * qy
        a2 += qx * sy - sx * qy
    P = mesh.tri.pts
    xi, yi = P[i]
    kink = math.inf
    for k in range(m):
        k1 = (k + 1) % m
        # spoke (a_{k+1}, i) shared by triangles k and k+1
        ax, ay = P[rim[k1]]
        dx, dy = xi - ax, yi - ay
        nx, ny = dy, -dx
        j0 = nx * (g[k1][0] - g[k][0]) + ny * (g[k1][1] - g[k][1])
        j1 = nx * (q[k1][0] - q[k][0]) + ny * (q[k1][1] - q[k][1])
        if j1 < 0:
            d = -j0 / j1
            if d < kink:
                kink = d
    return 0.5 * a0, 0.5 * a1, 0.5 * a2, max(kink, 0.0), m


def star_area(mesh: EnvelopeMesh, i: int) -> float:
    data = _star(mesh, i)
    if data is None:
        return 0.0
    return _poly_area(data[1])


def nodal_areas(mesh: EnvelopeMesh) -> np.ndarray:
    """``|du_h(x_i)|`` at every interior node (0 out of contact)."""
    return np.array([star_area(mesh, i) for i in range(mesh.nodes.n)])


def _smallest_root(a0, a1, a2, f):
    """Smallest ``d > 0`` with ``a0 + a1 d + a2 d^2 = f`` given ``a0 > f``."""
    c = a0 - f
    if a2 == 0.0:
        return c / -a1 if a1 < 0 else math.inf
    disc = a1 * a1 - 4.0 * a2 * c
    if disc < 0:
        return math.inf
    den = -a1 + math.sqrt(disc)
    if den <= 0:
        return math.inf
    return 2.0 * c / den


# --------------------------------------------------------------------------
# nodal solve


def nodal_solve(mesh: EnvelopeMesh, i: int, f_i: float, tol_t: float,
                tol_area: float = 0.0, max_iter: int = 200) -> float:
    """Raise ``u_i`` to the largest value with ``|du_h(x_i)| = f_i``.

    The bracket ``[lo: area >= f_i | hi: area < f_i]`` is kept throughout.
    Trial points come from the exact quadratic area model of the current
    star, cut at the first spoke flip; when a trial leaves the bracket the
    step falls back to bisection.  Returns the new value; the mesh is left at
    that value.
    """
    s0 = mesh.value(i)
    if not mesh.in_contact(i):
        raise BracketError(f"node {i} is out of contact before its update")
    area = star_area(mesh, i)
    if area < f_i - tol_area:
        raise BracketError(f"node {i}: area {area:.6g} below f_i={f_i:.6g}")
    if f_i == 0:
        return _raise_to_leave(mesh, i, s0)
    lo, hi = s0, math.inf
    lo_area = area
    backoff = 0.5 * tol_t
    for _ in range(max_iter):
        if f_i > 0 and lo_area - f_i <= tol_area:
            break
        if hi - lo <= tol_t:
            break
        model = _star_model(mesh, i)
        a0, a1, a2, kink, deg = model
        d = kink if f_i == 0 else min(_smallest_root(a0, a1, a2, f_i), kink)
        target = lo + d
        if not math.isfinite(target) or target <= lo:
            target = lo + max(tol_t, 1e-3 * (1.0 + abs(lo))) if math.isinf(hi) else 0.5 * (lo + hi)
        if target >= hi:
            target = max(0.5 * (lo + hi), hi - backoff)
            backoff *= 4.0
        mesh.update(i, target)
        if mesh.in_contact(i):
            a_t = star_area(mesh, i)
            ok = a_t >= f_i - tol_area if f_i > 0 else True
        else:
            a_t, ok = 0.0, False
        if ok:
            lo, lo_area = target, a_t
            if f_i > 0 and a_t - f_i <= tol_area:
                return lo
        else:
            hi = target
            mesh.update(i, lo)
    if mesh.value(i) != lo:
        mesh.update(i, lo)
    return lo


def leave_value(mesh: EnvelopeMesh, i: int) -> float:
    """Value of the envelope of all other nodes at ``x_i``: the largest
    ``u_i`` keeping node ``i`` in contact."""
    verts, w = mesh.tri.support_without(i)
    h = mesh.tri.h
    return w[0] * h[verts[0]] + w[1] * h[verts[1]] + w[2] * h[verts[2]]


def _settle_at(mesh: EnvelopeMesh, i: int, s: float, floor: float) -> float:
    """Set ``u_i = s``, stepping down by growing ulps until node ``i`` is in
    contact (the computed support value may round above the exact one)."""
    step = 0.0
    target = s
    for _ in range(80):
        mesh.update(i, target)
        if mesh.in_contact(i):
            return target
        step = max(2.0 * step, math.ulp(s) or 5e-324)
        target = max(s - step, floor)
    raise BracketError(f"node {i} does not regain contact below {s!r}")


def _raise_to_leave(mesh: EnvelopeMesh, i: int, s0: float) -> float:
    s = leave_value(mesh, i)
    if s <= s0:
        return s0
    return _settle_at(mesh, i, s, s0)


def sweep(mesh: EnvelopeMesh, rhs, tol_t: float, order="lexicographic", seed: int = 0,
          tol_res: float = 0.0, m=None, monitor=None) -> float:
    """One Gauss-Seidel pass of nodal solves; returns the largest increment."""
    f = _rhs_values(rhs)
    n = mesh.nodes.n
    if m is None:
        m = mesh.nodes.base_mesh.m[:n]
    idx = _order(n, order, seed)
    big = 0.0
    for i in idx:
        old = mesh.value(i)
        new = nodal_solve(mesh, int(i), float(f[i]), tol_t, tol_res * max(f[i], m[i]))
        if monitor is not None:
            monitor(int(i), old, new)
        big = max(big, new - old)
    return big


def _order(n, order, seed):
    if order in ("lexicographic", "lex"):
        return range(n)
    if order in ("reversed", "reverse"):
        return range(n - 1, -1, -1)
    if order == "random":
        return np.random.default_rng(seed).permutation(n)
    raise ValueError(f"unknown sweep order {order!r}")


# --------------------------------------------------------------------------
# initial subsolution


def _center_radius(nodes: NodeSet):
    if nodes.domain is not None:
        c = np.asarray(nodes.domain.center, dtype=float)
    else:
        c = nodes.points.mean(axis=0)
    R = float(np.sqrt(((nodes.points - c) ** 2).sum(axis=1)).max())
    return c, R


def init_subsolution(nodes: NodeSet, rhs, g=None, max_doublings: int = 40) -> np.ndarray:
    """Nodal paraboloid ``(sqrt(L)/2)(|x - c|^2 - R^2)`` shifted below the
    boundary data, with ``L`` doubled from ``max f_i / m_i`` until every
    interior area is at least ``f_i``."""
    f = _rhs_values(rhs)
    n, N = nodes.n, nodes.N
    g = np.zeros(N - n) if g is None else np.asarray(g, dtype=float)
    gmin = float(g.min()) if len(g) else 0.0
    m = nodes.base_mesh.m[:n]
    c, R = _center_radius(nodes)
    r2 = ((nodes.points - c) ** 2).sum(axis=1) - R * R
    lam0 = float(np.max(f / m)) if n else 0.0
    u = np.empty(N)
    u[n:] = g
    if lam0 == 0.0:
        u[:n] = gmin
        return u
    lam = lam0
    for _ in range(max_doublings + 1):
        u[:n] = 0.5 * math.sqrt(lam) * r2[:n] + gmin
        mesh = EnvelopeMesh(nodes, u)
        if len(mesh.contact_set()) == n and np.all(nodal_areas(mesh) >= f):
            return u
        lam *= 2.0
    raise SubsolutionError(f"no subsolution up to Lambda = {lam0:.3g} * 2^{max_doublings}")


# --------------------------------------------------------------------------
# Newton warm start


class _Assembly:
    """Areas and their Jacobian for every interior node on a fixed mesh."""

    def __init__(self, mesh: EnvelopeMesh):
        tri = mesh.tri
        n = mesh.nodes.n
        P = mesh.nodes.points
        alive = [k for k, v in enumerate(tri.tv) if v is not None]
        row_of = {t: r for r, t in enumerate(alive)}
        T = np.array([tri.tv[t] for t in alive], dtype=np.int64)
        a, b, c = P[T[:, 0]], P[T[:, 1]], P[T[:, 2]]
        det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
        H = np.empty((len(T), 3, 2))
        for j, (p, q) in enumerate(((b, c), (c, a), (a, b))):
            H[:, j, 0] = -(q[:, 1] - p[:, 1]) / det
            H[:, j, 1] = (q[:, 0] - p[:, 0]) / det
        owner, cur, prev, nxt, first = [], [], [], [], []
        contact = np.ones(n, dtype=bool)
        for i in range(n):
            ts, closed = tri.star(i)
            if not ts or not closed:
                contact[i] = False
                continue
            rows = [row_of[t] for t in ts]
            m = len(rows)
            owner += [i] * m
            cur += rows
            prev += [rows[k - 1] for k in range(m)]
            nxt += [rows[(k + 1) % m] for k in range(m)]
            first += [rows[0]] * m
        self.n, self.T, self.H = n, T, H
        self.owner = np.array(owner, dtype=np.int64)
        self.cur = np.array(cur, dtype=np.int64)
        self.prev = np.array(prev, dtype=np.int64)
        self.nxt = np.array(nxt, dtype=np.int64)
        self.first = np.array(first, dtype=np.int64)
        self.contact = contact

    def evaluate(self, u, jacobian=True):
        G = np.einsum("tj,tjd->td", u[self.T], self.H)
        c = G[self.first]
        p = G[self.cur] - c
        q = G[self.nxt] - c
        cr = p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0]
        A = 0.5 * np.bincount(self.owner, weights=cr, minlength=self.n)
        if not jacobian:
            return A, None
        D = G[self.nxt] - G[self.prev]
        D = 0.5 * np.stack([D[:, 1], -D[:, 0]], axis=1)
        Hk = self.H[self.cur]  # (E, 3, 2)
        vals = np.einsum("ed,ejd->ej", D, Hk).ravel()
        rows = np.repeat(self.owner, 3)
        cols = self.T[self.cur].ravel()
        keep = cols < self.n
        J = sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(self.n, self.n))
        return A, J


def _blocked(mesh: EnvelopeMesh) -> set:
    """Vertices of the triangles that contain an out-of-contact node."""
    tri = mesh.tri
    out = set()
    for w in tri.outside:
        loc = tri.locate(tri.pts[w], tri.near(w))
        if loc is None:
            continue
        t, k = loc
        out.update(tri.tv[t])
        if k is not None and tri.tn[t][k] != -1:
            out.update(tri.tv[tri.tn[t][k]])
    return out


def _local_support(tri, i: int, max_link: int = 12):
    """Support triangle and weights of the envelope without node ``i``.

    When the link of ``i`` is a convex polygon and no other node lies inside
    it, that envelope agrees with the current one outside the star and is the
    lower hull of the link vertices inside, so the lowest plane through three
    link vertices whose triangle contains ``x_i`` gives it.  Returns None
    when these conditions fail.
    """
    ts, closed = tri.star(i)
    if not closed or len(ts) > max_link:
        return None
    tv, pts, h = tri.tv, tri.pts, tri.h
    link = []
    for t in ts:
        v = tv[t]
        link.append(v[(v.index(i) + 1) % 3])
    k = len(link)
    for j in range(k):
        if orient2d(pts[link[j - 1]], pts[link[j]], pts[link[(j + 1) % k]]) < 0:
            return None
    x, y = pts[i]
    best, arg = math.inf, None
    for a, b, c in itertools.combinations(link, 3):
        (ax, ay), (bx, by), (cx, cy) = pts[a], pts[b], pts[c]
        det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if det <= 0.0:
            continue
        la = ((bx - x) * (cy - y) - (by - y) * (cx - x)) / det
        lb = ((cx - x) * (ay - y) - (cy - y) * (ax - x)) / det
        lc = 1.0 - la - lb
        if min(la, lb, lc) < -1e-12:
            continue
        val = la * h[a] + lb * h[b] + lc * h[c]
        if val < best:
            best, arg = val, ((a, b, c), (la, lb, lc))
    return arg


class _System:
    """Scaled residual of the discrete equation and its Jacobian on the
    current triangulation.

    Nodes with ``f_i > 0`` contribute ``(sqrt|du_h(x_i)| - sqrt f_i) / sqrt m_i``;
    nodes with ``f_i = 0`` contribute ``(u_i - G_i(x_i)) / m_i`` where ``G_i`` is
    the envelope of the other nodes, the equation satisfied by the largest
    value with zero area.
    """

    def __init__(self, mesh: EnvelopeMesh, f, m, eps: float = 0.0):
        self.mesh = mesh
        self.n = mesh.nodes.n
        self.m = m
        self.zero = np.flatnonzero(f == 0) if eps == 0.0 else np.array([], dtype=np.int64)
        self.pos = np.flatnonzero(f > 0) if eps == 0.0 else np.arange(self.n)
        fe = f + eps * float(f.sum() / m.sum()) * m
        self.sf = np.sqrt(fe)

    def feasible(self) -> bool:
        vt = self.mesh.tri.vt
        return all(vt[i] != -1 for i in self.pos)

    def evaluate(self, jacobian: bool = True):
        mesh, n, m = self.mesh, self.n, self.m
        u = np.asarray(mesh.tri.h)
        asm = _Assembly(mesh)
        A, J = asm.evaluate(u, jacobian)
        F = np.zeros(n)
        pos = self.pos
        sA = np.sqrt(np.maximum(A[pos], 0.0))
        F[pos] = (sA - self.sf[pos]) / np.sqrt(m[pos])
        rows, cols, vals = [], [], []
        blocked = _blocked(mesh) if len(self.zero) else set()
        for i in self.zero:
            i = int(i)
            sup = None if i in blocked else _local_support(mesh.tri, i)
            verts, w = sup if sup is not None else mesh.tri.support_without(i)
            F[i] = (u[i] - sum(wk * u[v] for v, wk in zip(verts, w))) / m[i]
            if jacobian:
                rows.append(i)
                cols.append(i)
                vals.append(1.0 / m[i])
                for v, wk in zip(verts, w):
                    if v < n:
                        rows.append(i)
                        cols.append(v)
                        vals.append(-wk / m[i])
        if not jacobian:
            return F, None
        scale = np.zeros(n)
        scale[pos] = 0.5 / (np.maximum(sA, 1e-300) * np.sqrt(m[pos]))
        Jp = sp.diags(scale) @ J
        Jz = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        return F, (Jp + Jz).tocsc()


def newton_warm_start(nodes: NodeSet, rhs, u0, max_iter: int = 80, tol: float = 1e-13,
                      mesh: EnvelopeMesh | None = None, report: SolveReport | None = None,
                      continuation=(1.0, 1e-2, 1e-4)):
    """Damped Newton on the discrete equation from a convex ``u0``.

    The square roots of the areas are used so that rows stay well scaled
    when ``f_i`` is small.  When some ``f_i`` vanish, a few regularized
    solves (``f_i + eps mean(f/m) m_i``) precede the exact system.  Returns
    nodal values in which every node with ``f_i > 0`` is in contact; the
    caller must restore a subsolution before the Perron sweeps.
    """
    f = _rhs_values(rhs)
    n = nodes.n
    m = nodes.base_mesh.m[:n]
    u = np.array(u0, dtype=float)
    if mesh is None:
        mesh = EnvelopeMesh(nodes, u)
    else:
        mesh.tri.set_heights(u)
    if n == 0 or not np.any(f > 0):
        return u, mesh
    stages = list(continuation) + [0.0] if np.any(f == 0) else [0.0]
    its = 0
    for eps in stages:
        system = _System(mesh, f, m, eps)
        scale = float(np.max(system.sf / np.sqrt(m)))
        target = (1e-6 if eps > 0 else tol) * scale
        F, J = system.evaluate()
        fn = float(np.max(np.abs(F)))
        for _ in range(max_iter):
            if fn <= target:
                break
            try:
                du = spla.spsolve(J, -F)
            except RuntimeError as exc:  # singular factor
                log.debug("newton linear solve failed: %s", exc)
                break
            if not np.all(np.isfinite(du)):
                break
            its += 1
            alpha, accepted, stalled = 1.0, False, False
            while alpha >= 2.0 ** -30:
                un = u.copy()
                un[:n] += alpha * du
                mesh.tri.set_heights(un)
                if system.feasible():
                    Fn, Jn = system.evaluate()
                    fnn = float(np.max(np.abs(Fn)))
                    if fnn < (1.0 - 1e-4 * alpha) * fn or fnn <= target:
                        # little progress near roundoff: the stage is done
                        stalled = fnn > 0.25 * fn and fnn <= 1e-9 * scale
                        u, fn, accepted = un, fnn, True
                        F, J = Fn, Jn
                        break
                alpha *= 0.5
            log.debug("newton eps=%g |F|=%.3e alpha=%g outside=%d", eps, fn, alpha,
                      len(mesh.tri.outside))
            if not accepted:
                mesh.tri.set_heights(u)
                break
            if stalled:
                break
    if report is not None:
        report.newton_iterations += its
    mesh.tri.set_heights(u)
    return u, mesh


def _restore_subsolution(nodes: NodeSet, rhs, u, mesh: EnvelopeMesh, tol_area):
    """Lower interior values by a small multiple of a strictly convex
    paraboloid until every node is in contact and every area is at least
    ``f_i - tol_area``.

    Nodes with ``f_i = 0`` may end a Newton solve a few ulps above the
    envelope of the others; the paraboloid pulls them back into contact.

    Adding ``delta * b`` with ``b`` convex and nonpositive at the interior
    nodes (zero at the boundary) grows each subdifferential by at least
    ``delta * |db(x_i)|`` in the Minkowski sense, so the square roots of the
    areas add.
    """
    f = _rhs_values(rhs)
    n = nodes.n
    c, R = _center_radius(nodes)
    b = ((nodes.points - c) ** 2).sum(axis=1) - R * R
    b[n:] = 0.0
    bmesh = EnvelopeMesh(nodes, b)
    Ab = nodal_areas(bmesh)
    A = nodal_areas(mesh)
    deficit = np.sqrt(f) - np.sqrt(np.maximum(A, 0.0))
    delta = float(np.max(np.maximum(deficit, 0.0) / np.sqrt(Ab)))
    if delta == 0.0 and len(mesh.contact_set()) == n and np.all(A >= f - tol_area):
        return u
    delta = max(2.0 * delta, 1e-16)
    for _ in range(60):
        v = u.copy()
        v[:n] += delta * b[:n]
        mesh.tri.set_heights(v)
        if len(mesh.contact_set()) == n and np.all(nodal_areas(mesh) >= f - tol_area):
            return v
        delta *= 4.0
    raise SubsolutionError("could not restore a subsolution after the warm start")


# --------------------------------------------------------------------------
# drivers


def solve_nodal(nodes: NodeSet, rhs, g=None, tol_res: float = 1e-8, tol_t: float | None = None,
                max_sweeps: int = 10000, order="lexicographic", seed: int = 0,
                warm_start: str | None = "newton", u0=None, callback=None, monitor=None):
    """Perron iteration on a given node set and right-hand side.

    Returns ``(u, mesh, report)``; raises :class:`MaxSweepsExceeded` with the
    partial state attached when ``max_sweeps`` runs out.  ``callback(k, mesh,
    r, inc)`` runs after every sweep and ``monitor(i, old, new)`` after every
    nodal update.
    """
    t0 = time.perf_counter()
    f = _rhs_values(rhs)
    n = nodes.n
    m = nodes.base_mesh.m[:n]
    tol_area = tol_res * np.maximum(f, m)
    report = SolveReport()
    u = init_subsolution(nodes, f, g) if u0 is None else np.array(u0, dtype=float)
    if tol_t is None:
        tol_t = default_tol_t(u)
    mesh = EnvelopeMesh(nodes, u, seed=seed)
    flips0 = mesh.flip_count
    if warm_start == "newton":
        start = u.copy()
        v, mesh = newton_warm_start(nodes, f, u, mesh=mesh, report=report)
        v = _restore_subsolution(nodes, f, v, mesh, tol_area)
        # the max of two subsolutions is a subsolution, so jumping to it
        # keeps the iterates nondecreasing
        w = np.maximum(start, v)
        mesh.tri.set_heights(w)
        if len(mesh.contact_set()) == n and np.all(nodal_areas(mesh) >= f - tol_area):
            u = w
        else:
            log.warning("warm start rejected; continuing from the initial subsolution")
            mesh.tri.set_heights(start)
            u = start
    elif warm_start is not None:
        raise ValueError(f"unknown warm start {warm_start!r}")
    r = nodal_areas(mesh) - f
    for k in range(max_sweeps):
        inc = sweep(mesh, f, tol_t, order=order, seed=seed + k, tol_res=tol_res, m=m,
                    monitor=monitor)
        report.sweeps += 1
        report.value_change_history.append(inc)
        r = nodal_areas(mesh) - f
        if callback is not None:
            callback(k, mesh, r, inc)
        if np.all(np.abs(r) <= tol_area) and inc <= tol_t:
            report.converged = True
            break
    report.final_residual = float(np.max(np.abs(r))) if n else 0.0
    report.flip_count = mesh.flip_count - flips0
    report.wall_time = time.perf_counter() - t0
    u = mesh.values
    if not report.converged:
        raise MaxSweepsExceeded(f"no convergence within {max_sweeps} sweeps", report, u, mesh)
    return u, mesh, report


def solve(problem, h: float, tol_res: float = 1e-8, max_sweeps: int = 10000, **kw):
    """Discretize ``problem`` at spacing ``h`` and solve.

    ``problem`` needs ``nodes(h)``, ``rhs(nodes)`` and ``boundary_values(nodes)``
    (see :class:`mongeampere.problems.ProblemSpec`).
    """
    nodes = problem.nodes(h)
    return solve_nodal(nodes, problem.rhs(nodes), problem.boundary_values(nodes),
                       tol_res=tol_res, max_sweeps=max_sweeps, **kw)
