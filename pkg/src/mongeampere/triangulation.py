"""Regular triangulations maintained by exact edge flips.

The triangulation is the projection of the lower convex hull of lifted
points ``(x_k, height_k)`` under the symbolic perturbation of
:func:`~mongeampere.geom.below_perturbed`.  With zero heights it is
the Delaunay triangulation; with nodal values it is the mesh induced by the
convex envelope.

Lawson flips repair illegal edges.  When an illegal edge sits in a
non-convex quadrilateral, the reflex vertex lies in the closed triangle of
the other three and above their plane, so it is redundant for the lower
hull and is removed (its star is re-triangulated and legalized).  Nodes
not carried by the triangulation are the non-contact nodes.
"""

from __future__ import annotations

import logging
import random

import numpy as np

from .geom import below_perturbed, orient2d

log = logging.getLogger(__name__)


class CollinearNodesError(ValueError):
    """Raised when every node lies on one line."""


class FlipBudgetExceeded(RuntimeError):
    """Internal guard: legalization did not settle within its flip budget."""


class RegularTriangulation:
    """Mutable lower-hull triangulation over a fixed point list.

    Parameters
    ----------
    points : sequence of (x, y)
    heights : sequence of float
    base : list of (i, j, k), optional
        Any valid triangulation of the convex hull of ``points`` using every
        point.  Computed by a sweep when omitted.
    legalize : bool
        Skip the initial flips when False (fault injection for the
        certificate tests; the result is generally not a lower hull).
    """

    def __init__(self, points, heights, base=None, seed: int = 0, legalize: bool = True):
        self.pts = [(float(p[0]), float(p[1])) for p in points]
        self.h = [float(v) for v in heights]
        if len(self.h) != len(self.pts):
            raise ValueError("heights and points differ in length")
        self.base = [tuple(t) for t in base] if base is not None else sweep_triangulation(self.pts)
        self._rng = random.Random(seed)
        self._rand = self._rng.random
        self.flip_count = 0
        self.removal_count = 0
        self._P = None  # numpy copy of pts for vectorized filters
        self._base_nb = None  # base mesh neighbours, walk starts for hidden vertices
        self._reset(self.base)
        if legalize:
            self.legalize(self._all_edges(), budget=0)

    # ------------------------------------------------------------------ setup
    def _reset(self, tris):
        n = len(self.pts)
        self.tv: list = []
        self.tn: list = []
        self.free: list = []
        self.vt = [-1] * n
        self.outside: set = set()
        edges = {}
        for tri in tris:
            a, b, c = tri
            if orient2d(self.pts[a], self.pts[b], self.pts[c]) < 0:
                b, c = c, b
            t = len(self.tv)
            self.tv.append([a, b, c])
            self.tn.append([-1, -1, -1])
            for k in range(3):
                p, q = self.tv[t][(k + 1) % 3], self.tv[t][(k + 2) % 3]
                edges[(p, q)] = (t, k)
                self.vt[self.tv[t][k]] = t
        for (p, q), (t, k) in edges.items():
            other = edges.get((q, p))
            if other is not None:
                self.tn[t][k] = other[0]
        self.outside = {v for v in range(n) if self.vt[v] == -1}
        self._last = 0 if self.tv else -1
        self._touched: list = []
        self._hint: dict = {}  # removed vertex -> a former neighbour

    def rebuild(self):
        """Recompute from the base triangulation with the current heights."""
        self._reset(self.base)
        self.legalize(self._all_edges(), budget=0)

    def _all_edges(self):
        out = []
        for t, v in enumerate(self.tv):
            if v is None:
                continue
            for k in range(3):
                p, q = v[(k + 1) % 3], v[(k + 2) % 3]
                if p < q or self.tn[t][k] == -1:
                    out.append((p, q))
        return out

    # -------------------------------------------------------------- queries
    def triangles(self):
        """Live triangles as counterclockwise vertex triples."""
        return [tuple(v) for v in self.tv if v is not None]

    def facet_set(self):
        return frozenset(tuple(sorted(v)) for v in self.tv if v is not None)

    def contains_vertex(self, v: int) -> bool:
        return self.vt[v] != -1

    def star(self, p: int):
        """Triangles around ``p`` in counterclockwise order and whether the
        star is closed (``p`` interior to the hull)."""
        t0 = self.vt[p]
        if t0 == -1:
            return [], False
        tv, tn = self.tv, self.tn
        t = t0
        # rotate clockwise to the first triangle of an open star
        while True:
            i = tv[t].index(p)
            prev = tn[t][(i + 2) % 3]
            if prev == -1:
                closed = False
                break
            if prev == t0:
                closed = True
                break
            t = prev
        first = t0 if closed else t
        out = [first]
        t = first
        while True:
            i = tv[t].index(p)
            nxt = tn[t][(i + 1) % 3]
            if nxt == -1 or nxt == first:
                break
            out.append(nxt)
            t = nxt
        return out, closed

    def neighbors(self, p: int):
        """Vertices adjacent to ``p``."""
        tris, _ = self.star(p)
        out = set()
        for t in tris:
            out.update(self.tv[t])
        out.discard(p)
        return out

    def find_edge(self, p: int, q: int):
        """``(t, k)`` with edge ``{p, q}`` opposite vertex ``k`` of ``t``,
        or None."""
        tp, tq = self.vt[p], self.vt[q]
        if tp == -1 or tq == -1:
            return None
        tv, tn = self.tv, self.tn
        # rotate around both endpoints at once: one of them may have a
        # very large star (the tip of a cone)
        a, b = tp, tq
        while True:
            va, vb = tv[a], tv[b]
            if q in va:
                i = va.index(p)
                return a, 3 - i - va.index(q)
            if p in vb:
                i = vb.index(p)
                return b, 3 - i - vb.index(q)
            a = tn[a][(va.index(p) + 1) % 3]
            b = tn[b][(vb.index(q) + 1) % 3]
            if a == tp or b == tq:
                return None
            if a == -1 or b == -1:
                break
        for step in (1, 2):  # counterclockwise, then clockwise for open stars
            t = tp
            while True:
                v = tv[t]
                i = v.index(p)
                if q in v:
                    return t, 3 - i - v.index(q)
                t = tn[t][(i + step) % 3]
                if t == -1:
                    break
                if t == tp:
                    return None
        return None

    def near(self, p: int):
        """A live triangle close to vertex ``p`` (a walk start), or None."""
        t = self.vt[p]
        if t != -1:
            return t
        q = self._hint.get(p)
        if q is not None and self.vt[q] != -1:
            return self.vt[q]
        if self._base_nb is None:
            self._base_nb = [[] for _ in self.pts]
            for a, b, c in self.base:
                self._base_nb[a] += (b, c)
                self._base_nb[b] += (c, a)
                self._base_nb[c] += (a, b)
        for q in self._base_nb[p]:
            if self.vt[q] != -1:
                return self.vt[q]
        return None

    def locate(self, x, hint: int | None = None, vertex_ok: bool = False):
        """Visibility walk to the triangle containing ``x``.

        Returns ``(t, k)`` where ``k`` is None for a strict interior point and
        the index of the edge (opposite vertex ``k``) when ``x`` lies on it,
        or None when ``x`` is outside the hull.  A point on a vertex raises
        ValueError unless ``vertex_ok`` (then ``k`` is None).
        """
        t = hint if hint is not None and hint >= 0 and self.tv[hint] is not None else self._last
        if t == -1 or self.tv[t] is None:
            t = next(i for i, v in enumerate(self.tv) if v is not None)
        pts = self.pts
        for _ in range(4 * len(self.tv) + 16):
            v = self.tv[t]
            start = int(self._rand() * 3.0)
            moved = False
            zero = None
            for j in range(3):
                k = (start + j) % 3
                o = orient2d(pts[v[(k + 1) % 3]], pts[v[(k + 2) % 3]], x)
                if o < 0:
                    nb = self.tn[t][k]
                    if nb == -1:
                        return None
                    t = nb
                    moved = True
                    break
                if o == 0:
                    zero = k if zero is None else -2
            if not moved:
                self._last = t
                if zero == -2:
                    if vertex_ok:
                        return t, None
                    raise ValueError("point coincides with a vertex")
                return t, zero
        raise RuntimeError("point location did not terminate")

    def plane_value(self, t: int, x) -> float:
        a, b, c = self.tv[t]
        (ax, ay), (bx, by), (cx, cy) = self.pts[a], self.pts[b], self.pts[c]
        det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        la = ((bx - x[0]) * (cy - x[1]) - (by - x[1]) * (cx - x[0])) / det
        lb = ((cx - x[0]) * (ay - x[1]) - (cy - x[1]) * (ax - x[0])) / det
        lc = 1.0 - la - lb
        return la * self.h[a] + lb * self.h[b] + lc * self.h[c]

    # ------------------------------------------------------------- mutation
    def _alloc(self, a, b, c):
        if self.free:
            t = self.free.pop()
            self.tv[t] = [a, b, c]
            self.tn[t] = [-1, -1, -1]
        else:
            t = len(self.tv)
            self.tv.append([a, b, c])
            self.tn.append([-1, -1, -1])
        return t

    def _kill(self, t):
        self._touched.extend(self.tv[t])
        self.tv[t] = None
        self.tn[t] = None
        self.free.append(t)

    def _replace_nbr(self, t, old, new):
        if t == -1:
            return
        nb = self.tn[t]
        for k in range(3):
            if nb[k] == old:
                nb[k] = new
                return
        raise AssertionError("neighbour link broken")

    def flip(self, t: int, k: int):
        """Replace the edge opposite vertex ``k`` of ``t`` by the other
        diagonal of the (convex) quadrilateral."""
        tv, tn = self.tv, self.tn
        r, p, q = tv[t][k], tv[t][(k + 1) % 3], tv[t][(k + 2) % 3]
        u = tn[t][k]
        vu = tv[u]
        m = 3 - vu.index(p) - vu.index(q)
        s = vu[m]
        A = tn[t][(k + 2) % 3]  # across (r, p)
        B = tn[t][(k + 1) % 3]  # across (q, r)
        C = tn[u][vu.index(p)]  # across (s, q)
        D = tn[u][vu.index(q)]  # across (p, s)
        self._touched.extend((r, p, q, s))
        tv[t] = [r, p, s]
        tn[t] = [D, u, A]
        tv[u] = [s, q, r]
        tn[u] = [B, t, C]
        self._replace_nbr(B, t, u)
        self._replace_nbr(D, u, t)
        self.vt[p] = t
        self.vt[q] = u
        self.vt[r] = t
        self.vt[s] = u
        self.flip_count += 1
        return [(r, p), (p, s), (s, q), (q, r)]

    def remove_vertex(self, p: int):
        """Delete ``p`` and re-triangulate its star polygon by ear clipping.

        Returns the edges of the new triangles (for legalization).
        """
        tris, closed = self.star(p)
        tv, tn, pts = self.tv, self.tn, self.pts
        poly = []
        outer = {}
        for t in tris:
            i = tv[t].index(p)
            x, y = tv[t][(i + 1) % 3], tv[t][(i + 2) % 3]
            poly.append(x)
            outer[(x, y)] = tn[t][i]
        if not closed:
            i = tv[tris[-1]].index(p)
            poly.append(tv[tris[-1]][(i + 2) % 3])
        for t in tris:
            self._kill(t)
        self.vt[p] = -1
        self.outside.add(p)
        self.removal_count += 1

        new = []
        ring = list(poly)
        while len(ring) > 3:
            m = len(ring)
            for j in range(m):
                a, b, c = ring[j - 1], ring[j], ring[(j + 1) % m]
                if orient2d(pts[a], pts[b], pts[c]) <= 0:
                    continue
                if any(_in_closed_triangle(pts[a], pts[b], pts[c], pts[w])
                       for w in ring if w != a and w != b and w != c):
                    continue
                new.append((a, b, c))
                del ring[j]
                break
            else:
                raise RuntimeError("ear clipping found no ear")
        new.append(tuple(ring))

        ids = []
        edges = {}
        for a, b, c in new:
            t = self._alloc(a, b, c)
            ids.append(t)
            for k in range(3):
                edges[(tv[t][(k + 1) % 3], tv[t][(k + 2) % 3])] = (t, k)
                self.vt[tv[t][k]] = t
        out_edges = []
        for (x, y), (t, k) in edges.items():
            other = edges.get((y, x))
            if other is not None:
                tn[t][k] = other[0]
                if x < y:
                    out_edges.append((x, y))
            else:
                o = outer.get((x, y), -1)
                tn[t][k] = o
                if o != -1:
                    self._replace_nbr_edge(o, y, x, t)
                out_edges.append((x, y))
        self._last = ids[0]
        self._hint[p] = poly[0]
        return out_edges

    def _replace_nbr_edge(self, o, a, b, t):
        # in triangle o the directed edge a->b sits opposite some vertex
        v = self.tv[o]
        k = 3 - v.index(a) - v.index(b)
        self.tn[o][k] = t

    def insert_vertex(self, p: int, loc):
        """Split the located triangle (or edge) at ``p``; returns link edges."""
        t, k = loc
        tv, tn = self.tv, self.tn
        self.outside.discard(p)
        if k is None:
            a, b, c = tv[t]
            na, nb, nc = tn[t]
            self._touched.extend((a, b, c))
            tv[t] = [a, b, p]
            t2 = self._alloc(b, c, p)
            t3 = self._alloc(c, a, p)
            tn[t] = [t2, t3, nc]
            tn[t2] = [t3, t, na]
            tn[t3] = [t, t2, nb]
            self._replace_nbr(na, t, t2)
            self._replace_nbr(nb, t, t3)
            self.vt[a] = t
            self.vt[b] = t
            self.vt[c] = t2
            self.vt[p] = t
            self._last = t
            return [(a, b), (b, c), (c, a)]
        a, q, r = tv[t][k], tv[t][(k + 1) % 3], tv[t][(k + 2) % 3]
        u = tn[t][k]
        A = tn[t][(k + 2) % 3]  # across (a, q)
        B = tn[t][(k + 1) % 3]  # across (r, a)
        self._touched.extend((a, q, r))
        tv[t] = [a, q, p]
        t2 = self._alloc(a, p, r)
        edges = [(a, q), (r, a)]
        if u == -1:
            tn[t] = [-1, t2, A]
            tn[t2] = [-1, B, t]
            self._replace_nbr(B, t, t2)
        else:
            vu = tv[u]
            s = vu[3 - vu.index(q) - vu.index(r)]
            C = tn[u][vu.index(q)]  # across (r, s)
            D = tn[u][vu.index(r)]  # across (s, q)
            self._touched.append(s)
            tv[u] = [s, r, p]
            u2 = self._alloc(s, p, q)
            tn[t] = [u2, t2, A]
            tn[t2] = [u, B, t]
            tn[u] = [t2, u2, C]
            tn[u2] = [t, D, u]
            self._replace_nbr(B, t, t2)
            self._replace_nbr(D, u, u2)
            self.vt[s] = u
            edges += [(r, s), (s, q)]
        self.vt[q] = t
        self.vt[r] = t2
        self.vt[a] = t
        self.vt[p] = t
        self._last = t
        return edges

    # ---------------------------------------------------------- legalization
    def is_legal(self, t: int, k: int) -> bool:
        u = self.tn[t][k]
        if u == -1:
            return True
        r, p, q = self.tv[t][k], self.tv[t][(k + 1) % 3], self.tv[t][(k + 2) % 3]
        vu = self.tv[u]
        s = vu[3 - vu.index(p) - vu.index(q)]
        return not below_perturbed(self.pts, self.h, r, p, q, s, 1)

    def legalize(self, edges, budget: int | None = None):
        """Flip or remove until every queued edge (and its consequences) is
        locally convex.  ``budget=0`` disables the flip guard."""
        stack = list(edges)
        if budget is None:
            budget = 4 * (len(self.tv) - len(self.free)) + 64
        work = 0
        pts = self.pts
        while stack:
            p, q = stack.pop()
            loc = self.find_edge(p, q)
            if loc is None:
                continue
            t, k = loc
            if self.tn[t][k] == -1 or self.is_legal(t, k):
                continue
            work += 1
            if budget and work > budget:
                raise FlipBudgetExceeded(f"more than {budget} flips")
            r, p, q = self.tv[t][k], self.tv[t][(k + 1) % 3], self.tv[t][(k + 2) % 3]
            u = self.tn[t][k]
            vu = self.tv[u]
            s = vu[3 - vu.index(p) - vu.index(q)]
            if orient2d(pts[r], pts[s], pts[p]) >= 0:
                stack.extend(self.remove_vertex(p))
            elif orient2d(pts[r], pts[s], pts[q]) <= 0:
                stack.extend(self.remove_vertex(q))
            else:
                stack.extend(self.flip(t, k))

    def _safe_legalize(self, edges):
        try:
            self.legalize(edges)
        except FlipBudgetExceeded as exc:
            log.warning("legalization exceeded its budget (%s); rebuilding from scratch", exc)
            self.rebuild()

    def try_insert(self, p: int, hint: int | None = None) -> bool:
        """Insert ``p`` if its lifted point lies below the current surface."""
        if self.vt[p] != -1:
            return False
        loc = self.locate(self.pts[p], self.near(p) if hint is None else hint)
        if loc is None:
            return False
        t, _ = loc
        a, b, c = self.tv[t]
        if not below_perturbed(self.pts, self.h, a, b, c, p, 1):
            return False
        self._safe_legalize(self.insert_vertex(p, loc))
        return True

    def set_height(self, p: int, value: float):
        """Change one height and restore the lower-hull property locally."""
        old = self.h[p]
        value = float(value)
        self.h[p] = value
        self._touched = []
        if self.vt[p] == -1:
            if value < old:
                self.try_insert(p)
            return
        tris, _ = self.star(p)
        edges = []
        for t in tris:
            a, b, c = self.tv[t]
            edges += [(a, b), (b, c), (c, a)]
            self._touched += (a, b, c)
        self._safe_legalize(edges)
        if value > old and self.outside:
            self._reinsert_candidates()

    def support_without(self, p: int):
        """Vertices and barycentric weights of the triangle of the surface
        without ``p`` that contains ``pts[p]``; the state is restored.

        The height of that surface at ``pts[p]`` is the value at which ``p``
        leaves contact.  Vertices out of contact that the removal uncovers
        are inserted for the query.
        """
        present = self.vt[p] != -1
        hidden = self._hidden_near(p) if present else []
        if present:
            self._safe_legalize(self.remove_vertex(p))
        loc = self.locate(self.pts[p], self.near(p))
        if loc is None:
            raise ValueError(f"node {p} is not inside the hull of the others")
        if hidden and any(self._below_surface(w, loc[0]) for w in hidden):
            # Uncovered vertices change the surface.  The lower hull is unique,
            # so undoing the insertions and putting p back restores it.
            counts = (self.flip_count, self.removal_count)
            before = set(self.outside)
            for w in hidden:
                self.try_insert(w, hint=self.near(p))
            loc = self.locate(self.pts[p], self.near(p))
            out = self._weights(p, loc[0])
            for w in hidden:
                if self.vt[w] != -1:
                    self._safe_legalize(self.remove_vertex(w))
            self._reinsert(p)
            for r in sorted(self.outside - before):
                if not self.try_insert(r):
                    raise AssertionError("displaced vertex could not be reinserted")
            self.flip_count, self.removal_count = counts
            return out
        out = self._weights(p, loc[0])
        if present:
            self._reinsert(p)
        return out

    def _reinsert(self, p):
        self._touched = []
        if not self.try_insert(p):
            raise AssertionError("vertex in contact could not be reinserted")

    def _below_surface(self, w, hint):
        loc = self.locate(self.pts[w], hint)
        if loc is None:
            return False
        a, b, c = self.tv[loc[0]]
        return below_perturbed(self.pts, self.h, a, b, c, w, 1)

    def _weights(self, p, t):
        a, b, c = self.tv[t]
        x, y = self.pts[p]
        (ax, ay), (bx, by), (cx, cy) = self.pts[a], self.pts[b], self.pts[c]
        det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        la = ((bx - x) * (cy - y) - (by - y) * (cx - x)) / det
        lb = ((cx - x) * (ay - y) - (cy - y) * (ax - x)) / det
        return (a, b, c), (la, lb, 1.0 - la - lb)

    def _hidden_near(self, p: int):
        """Out-of-contact vertices in the closed star of ``p``, the only
        region where removing ``p`` changes the surface.

        A float test with a little slack; extra vertices are harmless since
        they stay above the surface.
        """
        if not self.outside:
            return []
        if self._P is None:
            self._P = np.array(self.pts)
        P = self._P
        tris = np.array([self.tv[t] for t in self.star(p)[0]])
        T = P[tris]  # (K, 3, 2)
        lo, hi = T.reshape(-1, 2).min(0), T.reshape(-1, 2).max(0)
        w = np.fromiter(self.outside, dtype=np.int64, count=len(self.outside))
        X = P[w]
        keep = np.all((X >= lo) & (X <= hi), axis=1) & (w != p)
        w, X = w[keep], X[keep]
        if len(w) == 0:
            return []
        tol = 1e-9 * float((hi - lo).max()) ** 2
        A, B = T, np.roll(T, -1, axis=1)  # edges a->b, b->c, c->a
        e = B - A  # (K, 3, 2)
        d = X[:, None, None, :] - A[None]  # (M, K, 3, 2)
        cr = e[None, ..., 0] * d[..., 1] - e[None, ..., 1] * d[..., 0]
        inside = np.any(np.all(cr >= -tol, axis=2), axis=1)
        return sorted(int(v) for v in w[inside])

    def set_heights(self, values):
        """Replace every height and legalize from the current triangulation.

        Cheaper than :meth:`rebuild` when the combinatorics barely change.
        """
        self.h = [float(v) for v in values]
        self.legalize(self._all_edges(), budget=0)
        for w in sorted(self.outside):
            self.try_insert(w)

    def _reinsert_candidates(self):
        if not self._touched:
            return
        xs = [self.pts[v][0] for v in self._touched]
        ys = [self.pts[v][1] for v in self._touched]
        x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
        for w in sorted(self.outside):
            x, y = self.pts[w]
            if x0 <= x <= x1 and y0 <= y <= y1:
                self.try_insert(w)


def _in_closed_triangle(a, b, c, x) -> bool:
    return orient2d(a, b, x) >= 0 and orient2d(b, c, x) >= 0 and orient2d(c, a, x) >= 0


def sweep_triangulation(pts):
    """Triangulate the convex hull of ``pts`` by a lexicographic sweep.

    Every point becomes a vertex; no triangle is degenerate.
    """
    order = sorted(range(len(pts)), key=lambda i: pts[i])
    if len(order) < 3:
        raise CollinearNodesError("need at least three nodes")
    # leading collinear run
    j = 2
    while j < len(order) and orient2d(pts[order[0]], pts[order[1]], pts[order[j]]) == 0:
        j += 1
    if j == len(order):
        raise CollinearNodesError("all nodes are collinear")
    tris = []
    c = order[j]
    chain = order[:j]
    side = orient2d(pts[chain[0]], pts[chain[1]], pts[c])
    for a, b in zip(chain, chain[1:]):
        tris.append((a, b, c) if side > 0 else (b, a, c))
    # hull as a counterclockwise cycle
    if side > 0:
        hull = chain + [c]
    else:
        hull = [c] + chain[::-1]
    hull = _ccw_cycle(pts, hull)
    for idx in order[j + 1:]:
        x = pts[idx]
        m = len(hull)
        vis = [orient2d(pts[hull[k]], pts[hull[(k + 1) % m]], x) < 0 for k in range(m)]
        # visible edges form one contiguous run
        start = next(k for k in range(m) if vis[k] and not vis[k - 1])
        k = start
        run = []
        while vis[k]:
            run.append(k)
            k = (k + 1) % m
        for e in run:
            a, b = hull[e], hull[(e + 1) % m]
            tris.append((b, a, idx))
        first = run[0]
        last = (run[-1] + 1) % m
        # splice: hull[first] -> idx -> hull[last]
        new = []
        k = last
        while True:
            new.append(hull[k])
            if k == first:
                break
            k = (k + 1) % m
        new.append(idx)
        hull = new
    return tris


def _ccw_cycle(pts, cyc):
    area = 0.0
    for k in range(len(cyc)):
        x0, y0 = pts[cyc[k]]
        x1, y1 = pts[cyc[(k + 1) % len(cyc)]]
        area += x0 * y1 - x1 * y0
    return cyc if area > 0 else cyc[::-1]
