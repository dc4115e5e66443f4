"""Convex envelope of a nodal function as a lower-hull triangulation."""

from __future__ import annotations

import numpy as np

from .domain import NodeSet
from .geom import orient2d
from .triangulation import RegularTriangulation

__all__ = [
    "BoundaryEdgeError",
    "EnvelopeMesh",
    "OutsideHullError",
    "build_envelope",
    "cell_gradient",
    "contact_set",
    "evaluate",
    "face_jump",
    "is_convex_nodal",
    "update_node",
]


class BoundaryEdgeError(ValueError):
    """A jump was requested on an edge with only one adjacent triangle."""


class OutsideHullError(ValueError):
    """Evaluation point outside the hull of the contact nodes."""


def _gradient(pts, u, a, b, c):
    (ax, ay), (bx, by), (cx, cy) = pts[a], pts[b], pts[c]
    ua = u[a]
    db, dc = u[b] - ua, u[c] - ua
    det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return ((db * (cy - ay) - dc * (by - ay)) / det,
            (dc * (bx - ax) - db * (cx - ax)) / det)


class EnvelopeMesh:
    """Mesh induced by the convex envelope ``Gamma(u_h)`` of nodal values.

    Nodes out of contact carry no triangles.  The mesh is mutable through
    :meth:`update`; copies are cheap enough for tests but solves work in
    place.
    """

    def __init__(self, nodes: NodeSet, values, seed: int = 0, legalize: bool = True):
        values = np.asarray(values, dtype=float)
        if values.shape != (nodes.N,):
            raise ValueError(f"expected {nodes.N} nodal values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("nodal values must be finite")
        self.nodes = nodes
        self.tri = RegularTriangulation(nodes.point_list, values.tolist(),
                                        base=nodes.base_mesh.triangles.tolist(), seed=seed,
                                        legalize=legalize)

    # -- state
    @property
    def values(self) -> np.ndarray:
        return np.array(self.tri.h)

    def value(self, i: int) -> float:
        return self.tri.h[i]

    @property
    def flip_count(self) -> int:
        return self.tri.flip_count

    def triangles(self):
        return self.tri.triangles()

    def facet_set(self):
        return self.tri.facet_set()

    def in_contact(self, i: int) -> bool:
        return self.tri.contains_vertex(i)

    def update(self, i: int, value: float) -> "EnvelopeMesh":
        self.tri.set_height(i, value)
        return self

    # -- geometry
    def gradient(self, K) -> tuple:
        a, b, c = K
        return _gradient(self.tri.pts, self.tri.h, a, b, c)

    def star_triangles(self, i: int):
        """Counterclockwise star of node ``i`` as vertex triples."""
        tris, _ = self.tri.star(i)
        return [tuple(self.tri.tv[t]) for t in tris]

    def star_gradients(self, i: int):
        pts, h = self.tri.pts, self.tri.h
        return [_gradient(pts, h, *self.tri.tv[t]) for t in self.tri.star(i)[0]]

    def neighbors(self, i: int):
        return self.tri.neighbors(i)

    def jump(self, p: int, q: int) -> float:
        loc = self.tri.find_edge(p, q)
        if loc is None:
            raise ValueError(f"({p}, {q}) is not an edge of the envelope mesh")
        t, k = loc
        u = self.tri.tn[t][k]
        if u == -1:
            raise BoundaryEdgeError(f"edge ({p}, {q}) lies on the hull boundary")
        tv = self.tri.tv
        a, b = tv[t][(k + 1) % 3], tv[t][(k + 2) % 3]
        g_in = self.gradient(tv[t])
        g_out = self.gradient(tv[u])
        (ax, ay), (bx, by) = self.tri.pts[a], self.tri.pts[b]
        dx, dy = bx - ax, by - ay
        L = (dx * dx + dy * dy) ** 0.5
        # outward unit normal of the counterclockwise triangle t across a->b
        nx, ny = dy / L, -dx / L
        return nx * (g_out[0] - g_in[0]) + ny * (g_out[1] - g_in[1])

    def interior_edges(self):
        out = []
        for t, v in enumerate(self.tri.tv):
            if v is None:
                continue
            for k in range(3):
                u = self.tri.tn[t][k]
                p, q = v[(k + 1) % 3], v[(k + 2) % 3]
                if u != -1 and p < q:
                    out.append((p, q))
        return out

    def evaluate(self, x) -> float:
        loc = self.tri.locate((float(x[0]), float(x[1])), vertex_ok=True)
        if loc is None:
            raise OutsideHullError(f"{tuple(x)} lies outside the hull of the contact nodes")
        return self.tri.plane_value(loc[0], x)

    def contact_set(self) -> set:
        n = self.nodes.n
        return {i for i in range(n) if self.tri.vt[i] != -1}

    def dump(self, path) -> None:
        """Triangle triples with the envelope gradient on each."""
        with open(path, "w", encoding="utf-8") as fh:
            tris = sorted(self.triangles(), key=lambda t: tuple(sorted(t)))
            fh.write(f"{len(tris)}\n")
            for t in tris:
                gx, gy = self.gradient(t)
                fh.write(f"{t[0]} {t[1]} {t[2]} {gx:.17g} {gy:.17g}\n")


def build_envelope(nodes: NodeSet, u) -> EnvelopeMesh:
    """Lower convex hull of the lifted nodes ``(x_i, u_i)``."""
    return EnvelopeMesh(nodes, u)


def update_node(mesh: EnvelopeMesh, i: int, new_value: float) -> EnvelopeMesh:
    """Replace ``u_i`` and restore the envelope by local flips (in place)."""
    return mesh.update(i, new_value)


def cell_gradient(mesh: EnvelopeMesh, K) -> tuple:
    """Gradient of the affine interpolant on triangle ``K`` (vertex triple)."""
    a, b, c = K
    if orient2d(mesh.tri.pts[a], mesh.tri.pts[b], mesh.tri.pts[c]) == 0:
        raise ValueError("degenerate triangle")
    return mesh.gradient(K)


def face_jump(mesh: EnvelopeMesh, F) -> float:
    """Jump of the normal derivative across interior edge ``F = (p, q)``;
    nonnegative on a convex envelope."""
    return mesh.jump(*F)


def evaluate(mesh: EnvelopeMesh, x) -> float:
    return mesh.evaluate(x)


def contact_set(mesh: EnvelopeMesh) -> set:
    """Interior nodes where the envelope touches the nodal value."""
    return mesh.contact_set()


def is_convex_nodal(nodes: NodeSet, u) -> bool:
    """Every interior node is in contact with the envelope."""
    return len(build_envelope(nodes, u).contact_set()) == nodes.n
