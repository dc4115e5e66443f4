"""Subdifferentials of nodal functions and their Monge-Ampere measures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import RhsVector
from .envelope import EnvelopeMesh
from .geom import ConvexPolygon, convex_hull, polygon_area

__all__ = [
    "BoundaryNodeError",
    "NotInContactError",
    "SubdiffPolygon",
    "adjacent_set",
    "ma_measure",
    "ma_residual",
    "subdifferential",
]


class BoundaryNodeError(ValueError):
    """Subdifferentials are defined at interior nodes only."""


class NotInContactError(ValueError):
    """The node does not touch the convex envelope."""


@dataclass(frozen=True)
class SubdiffPolygon:
    node: int
    polygon: ConvexPolygon

    @property
    def area(self) -> float:
        return polygon_area(self.polygon)

    @property
    def is_empty(self) -> bool:
        return len(self.polygon) == 0


def _check_interior(mesh: EnvelopeMesh, i: int) -> None:
    if not mesh.nodes.is_interior(i):
        raise BoundaryNodeError(f"node {i} is not an interior node")


def subdifferential(mesh: EnvelopeMesh, i: int) -> SubdiffPolygon:
    """Convex hull of the envelope gradients on the triangles around ``x_i``;
    empty when ``x_i`` is out of contact."""
    _check_interior(mesh, i)
    return SubdiffPolygon(i, convex_hull(mesh.star_gradients(i)))


def ma_measure(mesh: EnvelopeMesh, i: int) -> float:
    """``|du_h(x_i)|``."""
    return subdifferential(mesh, i).area


def star_area(mesh: EnvelopeMesh, i: int) -> float:
    """Shoelace area of the star gradients taken in star order.

    Equals :func:`ma_measure` on a convex envelope (the gradients around a
    node are then in convex position and counterclockwise); cheaper because
    it skips the hull.
    """
    g = mesh.star_gradients(i)
    m = len(g)
    if m < 3:
        return 0.0
    cx = sum(p[0] for p in g) / m
    cy = sum(p[1] for p in g) / m
    s = 0.0
    for k in range(m):
        x0, y0 = g[k - 1][0] - cx, g[k - 1][1] - cy
        x1, y1 = g[k][0] - cx, g[k][1] - cy
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def adjacent_set(mesh: EnvelopeMesh, i: int) -> set:
    """Nodes sharing a triangle with ``x_i`` in the induced mesh."""
    if not mesh.in_contact(i):
        raise NotInContactError(f"node {i} is not in contact")
    return set(mesh.neighbors(i))


def ma_residual(mesh: EnvelopeMesh, rhs: RhsVector | np.ndarray) -> np.ndarray:
    """``r_i = |du_h(x_i)| - f_i`` at every interior node."""
    f = rhs.values if isinstance(rhs, RhsVector) else np.asarray(rhs, float)
    return np.array([ma_measure(mesh, i) for i in range(mesh.nodes.n)]) - f
