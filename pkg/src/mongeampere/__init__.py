"""Oliker-Prussner type solver for the Dirichlet problem ``det D^2 u = f`` in 2D.

Nodal values on a lattice are raised one node at a time (Perron iteration)
until the area of the subdifferential of their convex envelope matches the
nodal mass of ``f``.  Exact geometric predicates decide every combinatorial
question, so the envelope mesh is always a true lower convex hull.
"""

from .domain import (BaseMesh, ConvexDomain, Disk, Ellipse, NodeSet, RhsVector, assemble_rhs,
                     assemble_rhs_dirac, delaunay, generate_nodes, lattice_patch)
from .envelope import (EnvelopeMesh, build_envelope, cell_gradient, contact_set, evaluate,
                       face_jump, is_convex_nodal, update_node)
from .estimator import MongeAmpereSolver
from .geom import (ConvexPolygon, convex_hull, lift_facet_sign, minkowski_sum, orient2d,
                   polygon_area, polygon_contains)
from .problems import (CATALOG, ProblemSpec, anisotropic_star, consistency_check, get_problem,
                       linf_error, nodal_error, rate_fit)
from .solver import (MaxSweepsExceeded, SolveReport, init_subsolution, nodal_solve, solve,
                     solve_nodal, sweep)
from .subdiff import SubdiffPolygon, adjacent_set, ma_measure, ma_residual, subdifferential

__version__ = "0.1.0"

__all__ = [
    "BaseMesh", "CATALOG", "ConvexDomain", "ConvexPolygon", "Disk", "Ellipse", "EnvelopeMesh",
    "MaxSweepsExceeded", "MongeAmpereSolver", "NodeSet", "ProblemSpec", "RhsVector",
    "SolveReport", "SubdiffPolygon", "adjacent_set", "anisotropic_star", "assemble_rhs",
    "assemble_rhs_dirac", "build_envelope", "cell_gradient", "consistency_check", "contact_set",
    "convex_hull", "delaunay", "evaluate", "face_jump", "generate_nodes", "get_problem",
    "init_subsolution", "is_convex_nodal", "lattice_patch", "lift_facet_sign", "linf_error",
    "ma_measure", "ma_residual", "minkowski_sum", "nodal_error", "nodal_solve", "orient2d",
    "polygon_area", "polygon_contains", "rate_fit", "solve", "solve_nodal", "subdifferential",
    "sweep", "update_node",
]
