"""scikit-learn style wrapper around the solver."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .problems import ProblemSpec, get_problem
from .solver import solve_nodal

__all__ = ["MongeAmpereSolver"]


class MongeAmpereSolver(BaseEstimator):
    """Solve a Dirichlet problem for ``det D^2 u = f`` and evaluate the
    piecewise linear envelope of the nodal solution.

    Parameters
    ----------
    problem : str or ProblemSpec
        Catalog name (``"P1"``, ``"P2"``, ...) or a problem object.
    h : float
        Lattice spacing.
    tol_res, tol_t, max_sweeps, order, seed, warm_start
        Passed to :func:`mongeampere.solver.solve_nodal`.

    Attributes
    ----------
    nodes_, values_, mesh_, report_ : fitted state
    n_iter_ : int
        Perron sweeps used.

    Examples
    --------
    >>> est = MongeAmpereSolver("P1", h=0.2).fit()
    >>> round(float(est.predict([[0.0, 0.0]])[0]), 2)
    -0.5
    """

    def __init__(self, problem="P1", h: float = 0.1, tol_res: float = 1e-8, tol_t=None,
                 max_sweeps: int = 10000, order: str = "lexicographic", seed: int = 0,
                 warm_start="newton"):
        self.problem = problem
        self.h = h
        self.tol_res = tol_res
        self.tol_t = tol_t
        self.max_sweeps = max_sweeps
        self.order = order
        self.seed = seed
        self.warm_start = warm_start

    def _spec(self) -> ProblemSpec:
        if isinstance(self.problem, ProblemSpec):
            return self.problem
        if isinstance(self.problem, str):
            return get_problem(self.problem)
        raise TypeError("problem must be a catalog name or a ProblemSpec")

    def _validate_params(self):
        if not (isinstance(self.h, numbers.Real) and self.h > 0):
            raise ValueError(f"h must be a positive number, got {self.h!r}")
        if not self.tol_res > 0:
            raise ValueError("tol_res must be positive")
        if self.tol_t is not None and not self.tol_t > 0:
            raise ValueError("tol_t must be positive")
        if int(self.max_sweeps) < 1:
            raise ValueError("max_sweeps must be at least 1")

    def fit(self, X=None, y=None):
        """Discretize and solve.  ``X`` and ``y`` are ignored; the data
        live in ``problem``."""
        self._validate_params()
        spec = self._spec()
        nodes = spec.nodes(float(self.h))
        u, mesh, report = solve_nodal(
            nodes, spec.rhs(nodes), spec.boundary_values(nodes), tol_res=self.tol_res,
            tol_t=self.tol_t, max_sweeps=int(self.max_sweeps), order=self.order,
            seed=self.seed, warm_start=self.warm_start)
        self.problem_ = spec
        self.nodes_ = nodes
        self.values_ = u
        self.mesh_ = mesh
        self.report_ = report
        self.n_iter_ = report.sweeps
        self.n_features_in_ = 2
        return self

    def predict(self, X) -> np.ndarray:
        """Envelope values at the rows of ``X`` (shape ``(M, 2)``)."""
        check_is_fitted(self, "mesh_")
        X = check_array(X, dtype=float)
        if X.shape[1] != 2:
            raise ValueError(f"expected 2 columns, got {X.shape[1]}")
        return np.array([self.mesh_.evaluate(x) for x in X])

    def score(self, X, y=None) -> float:
        """Negative max-norm error at ``X`` against ``y`` (or the exact
        solution of the problem when ``y`` is omitted); higher is better."""
        pred = self.predict(X)
        if y is None:
            if self.problem_.exact is None:
                raise ValueError("problem has no exact solution; pass y")
            y = self.problem_.exact(np.asarray(X, dtype=float))
        y = check_array(np.asarray(y, dtype=float).reshape(-1, 1)).ravel()
        if len(y) != len(pred):
            raise ValueError("X and y differ in length")
        return -float(np.max(np.abs(pred - y)))
