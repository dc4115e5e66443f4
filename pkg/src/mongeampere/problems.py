"""Benchmark problems with known solutions, error metrics and rate fits."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .domain import (BaseMesh, ConvexDomain, Disk, NodeSet, assemble_rhs, assemble_rhs_dirac,
                     generate_nodes, lattice_patch)
from .envelope import EnvelopeMesh, build_envelope
from .geom import convex_hull
from .subdiff import ma_measure

__all__ = [
    "CATALOG",
    "NoQualifiedNodeError",
    "ProblemSpec",
    "anisotropic_star",
    "consistency_check",
    "get_problem",
    "linf_error",
    "nodal_error",
    "rate_fit",
]


class NoQualifiedNodeError(ValueError):
    """No interior node is at distance ``R h`` or more from the boundary."""


@dataclass(frozen=True)
class ProblemSpec:
    """Domain, data and (optionally) the exact solution of a Dirichlet problem.

    ``density`` and ``exact`` map ``(M, 2)`` point arrays to ``(M,)`` values.
    ``masses`` is a list of ``(point, weight)`` pairs used instead of a
    density.  ``lam``/``Lam`` bound the Hessian of ``exact``; ``lam_f`` is
    the lower bound of the density.
    """

    name: str
    domain: ConvexDomain
    density: Callable | None = None
    masses: tuple = ()
    dirichlet: Callable | None = None
    exact: Callable | None = None
    regularity: str = "smooth"
    lam: float | None = None
    Lam: float | None = None
    lam_f: float | None = None
    description: str = ""
    node_options: dict = field(default_factory=dict)

    def nodes(self, h: float, **kw) -> NodeSet:
        opts = dict(self.node_options)
        opts.update(kw)
        return generate_nodes(self.domain, h, **opts)

    def rhs(self, nodes: NodeSet, quad_order: int = 4):
        if self.density is not None:
            return assemble_rhs(nodes.base_mesh, self.density, quad_order)
        return assemble_rhs_dirac(nodes, self.masses)

    def boundary_values(self, nodes: NodeSet) -> np.ndarray:
        if self.dirichlet is None:
            return np.zeros(nodes.N - nodes.n)
        return np.asarray(self.dirichlet(nodes.boundary), dtype=float).reshape(-1)


def _r(X):
    X = np.atleast_2d(X)
    return np.hypot(X[:, 0], X[:, 1])


def _p2_density(X):
    r = _r(X)
    out = np.zeros_like(r)
    k = r > 1.0
    out[k] = 1.0 - 1.0 / r[k]
    return out


def _p2_exact(X):
    r = _r(X)
    return np.where(r <= 1.0, 0.0, 0.5 * (r - 1.0) ** 2)


CATALOG = {
    "P1": ProblemSpec(
        "P1", Disk((0.0, 0.0), 1.0),
        density=lambda X: np.ones(len(np.atleast_2d(X))),
        exact=lambda X: 0.5 * (_r(X) ** 2 - 1.0),
        regularity="smooth", lam=1.0, Lam=1.0, lam_f=1.0,
        description="u = (|x|^2 - 1)/2 on the unit disk, f = 1"),
    # the exact solution equals 1/2 on |x| = 2, which is the Dirichlet datum
    "P2": ProblemSpec(
        "P2", Disk((0.0, 0.0), 2.0),
        density=_p2_density,
        dirichlet=_p2_exact,
        exact=_p2_exact,
        regularity="C11", lam=0.0, Lam=1.0, lam_f=0.0,
        description="u = 0 on |x| <= 1, (|x| - 1)^2 / 2 outside; f = 0 on the unit disk"),
    "P3": ProblemSpec(
        "P3", Disk((0.0, 0.0), 1.0),
        masses=(((0.0, 0.0), np.pi),),
        exact=lambda X: _r(X) - 1.0,
        regularity="cone",
        description="u = |x| - 1, point mass pi at the origin"),
    "P5": ProblemSpec(
        "P5", Disk((0.0, 0.0), 1.0),
        density=lambda X: (1.0 + _r(X) ** 2) * np.exp(_r(X) ** 2),
        dirichlet=lambda X: np.full(len(np.atleast_2d(X)), np.exp(0.5)),
        exact=lambda X: np.exp(0.5 * _r(X) ** 2),
        regularity="smooth", lam=1.0, Lam=2.0 * np.exp(0.5), lam_f=1.0,
        description="u = exp(|x|^2 / 2), nonzero boundary data"),
}


def anisotropic_star(m: int = 7, e=(1.0, 2.0), h: float = 1.0):
    """Lattice patch with ``u(x_i) = (x_i . e)^2``: a degenerate convex nodal
    function whose envelope is ``|x . e|`` near the centre (problem P4)."""
    nodes = lattice_patch(m, h)
    e = np.asarray(e, dtype=float)
    return nodes, (nodes.points @ e) ** 2


def get_problem(name: str) -> ProblemSpec:
    key = name.upper()
    if key == "P4":
        raise ValueError("P4 is a subdifferential example without a solve; see anisotropic_star")
    try:
        return CATALOG[key]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(CATALOG)} or P4") from None


# --------------------------------------------------------------------------
# errors and rates


def _halton(k: int, base: int) -> np.ndarray:
    out = np.zeros(k)
    for i in range(k):
        f, r, j = 1.0, 0.0, i + 1
        while j > 0:
            f /= base
            r += f * (j % base)
            j //= base
        out[i] = r
    return out


def _triangle_samples(k: int) -> np.ndarray:
    """Barycentric coordinates of ``k`` Halton points folded into the
    reference triangle.  The first ``k`` points of a longer list are the same,
    so the sample set grows with ``k``."""
    if k <= 0:
        return np.zeros((0, 3))
    s, t = _halton(k, 2), _halton(k, 3)
    flip = s + t > 1.0
    s[flip], t[flip] = 1.0 - s[flip], 1.0 - t[flip]
    return np.c_[1.0 - s - t, s, t]


def linf_error(mesh: EnvelopeMesh, exact: Callable, samples_per_cell: int = 16) -> float:
    """``max |u - Gamma(u_h)|`` over contact nodes, triangle barycentres and
    ``samples_per_cell`` quasi-random points in every envelope triangle."""
    P = mesh.nodes.points
    u = mesh.values
    T = np.array(mesh.triangles(), dtype=np.int64)
    contact = np.unique(T)
    err = float(np.max(np.abs(u[contact] - exact(P[contact]))))
    bary = np.vstack([[1 / 3, 1 / 3, 1 / 3], _triangle_samples(samples_per_cell)])
    X = np.einsum("qj,tjd->tqd", bary, P[T]).reshape(-1, 2)
    G = np.einsum("qj,tj->tq", bary, u[T]).reshape(-1)
    return max(err, float(np.max(np.abs(exact(X) - G))))


def nodal_error(nodes: NodeSet, u, exact: Callable) -> float:
    """``max_i |u(x_i) - u_h(x_i)|``."""
    return float(np.max(np.abs(np.asarray(u) - exact(nodes.points))))


def rate_fit(pairs, min_pairs: int = 3) -> float:
    """Least-squares slope of ``log(error)`` against ``log(h)``."""
    pairs = list(pairs)
    if len(pairs) < min_pairs:
        raise ValueError(f"need at least {min_pairs} (h, error) pairs, got {len(pairs)}")
    h = np.array([p[0] for p in pairs], dtype=float)
    e = np.array([p[1] for p in pairs], dtype=float)
    if np.any(e <= 0) or np.any(h <= 0):
        raise ValueError("spacings and errors must be positive")
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)


# --------------------------------------------------------------------------
# consistency of the measure for quadratics


def _boundary_distance(nodes: NodeSet) -> np.ndarray:
    """Distance of interior nodes to the domain boundary (or to the boundary
    of the node hull when no domain is attached)."""
    X = nodes.interior
    if nodes.domain is not None:
        return np.array([nodes.domain.distance_to_boundary(p) for p in X])
    hull = np.array(convex_hull(nodes.point_list).vertices)
    a, b = hull, np.roll(hull, -1, axis=0)
    d = b - a
    L2 = (d ** 2).sum(axis=1)
    t = np.clip(((X[:, None, :] - a[None]) * d[None]).sum(-1) / L2[None], 0.0, 1.0)
    proj = a[None] + t[..., None] * d[None]
    return np.sqrt(((X[:, None, :] - proj) ** 2).sum(-1)).min(axis=1)


def consistency_radius(nodes: NodeSet, Q) -> float:
    """``R = (Lambda / lambda) sigma^2`` for the quadratic ``x^T Q x / 2``."""
    ev = np.linalg.eigvalsh(np.asarray(Q, dtype=float))
    if ev[0] <= 0:
        raise ValueError("Q must be symmetric positive definite")
    return float(ev[-1] / ev[0] * nodes.sigma ** 2)


def consistency_check(nodes: NodeSet, mesh0: BaseMesh | None, Q, relative: bool = False,
                      return_count: bool = False):
    """Largest ``| |dp_h(x_i)| - det(Q) m_i |`` over interior nodes at distance
    at least ``R h`` from the boundary, for ``p(x) = x^T Q x / 2``.

    With ``relative=True`` each discrepancy is divided by ``det(Q) m_i``.
    """
    Q = np.asarray(Q, dtype=float)
    if not np.allclose(Q, Q.T):
        raise ValueError("Q must be symmetric")
    mesh0 = nodes.base_mesh if mesh0 is None else mesh0
    R = consistency_radius(nodes, Q)
    keep = np.flatnonzero(_boundary_distance(nodes) >= R * nodes.h)
    if len(keep) == 0:
        raise NoQualifiedNodeError(f"no node at distance >= R h = {R * nodes.h:.4g} from the boundary")
    P = nodes.points
    u = 0.5 * np.einsum("ij,jk,ik->i", P, Q, P)
    env = build_envelope(nodes, u)
    target = np.linalg.det(Q) * mesh0.m[keep]
    area = np.array([ma_measure(env, int(i)) for i in keep])
    dev = np.abs(area - target)
    if relative:
        dev = dev / target
    out = float(dev.max())
    return (out, len(keep)) if return_count else out
