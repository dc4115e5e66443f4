import doctest

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

import mongeampere.estimator as est_mod
from mongeampere import MongeAmpereSolver
from mongeampere.problems import get_problem


@pytest.fixture(scope="module")
def fitted():
    return MongeAmpereSolver("P1", h=0.2).fit()


def test_params_round_trip():
    est = MongeAmpereSolver("P3", h=0.1, order="reversed")
    params = est.get_params()
    assert params["problem"] == "P3" and params["h"] == 0.1 and params["order"] == "reversed"
    twin = clone(est)
    assert twin.get_params() == params and twin is not est
    est.set_params(h=0.05, seed=3)
    assert est.h == 0.05 and est.seed == 3
    with pytest.raises(ValueError):
        est.set_params(colour="red")
    assert "MongeAmpereSolver" in repr(est)


def test_fit_predict_score(fitted):
    assert fitted.n_iter_ == fitted.report_.sweeps >= 1
    assert fitted.values_.shape == (fitted.nodes_.N,)
    X = np.array([[0.0, 0.0], [0.3, -0.2], [0.5, 0.5]])
    pred = fitted.predict(X)
    assert pred.shape == (3,)
    assert np.all(np.abs(pred - get_problem("P1").exact(X)) < 0.02)
    s = fitted.score(X)
    assert -0.02 < s <= 0
    assert fitted.score(X, pred) == 0.0


def test_predict_validation(fitted):
    with pytest.raises(ValueError):
        fitted.predict([[0.0, 0.0, 0.0]])
    with pytest.raises(ValueError):
        fitted.predict([[np.nan, 0.0]])
    with pytest.raises(ValueError):
        fitted.score([[0.0, 0.0]], [1.0, 2.0])
    with pytest.raises(NotFittedError):
        MongeAmpereSolver().predict([[0.0, 0.0]])


@pytest.mark.parametrize("kw", [{"h": -0.1}, {"h": "big"}, {"tol_res": 0.0}, {"tol_t": -1.0},
                                {"max_sweeps": 0}])
def test_invalid_params_rejected_at_fit(kw):
    with pytest.raises(ValueError):
        MongeAmpereSolver(**kw).fit()


def test_problem_object_and_type_error():
    est = MongeAmpereSolver(get_problem("P5"), h=0.25).fit()
    assert est.problem_.name == "P5"
    with pytest.raises(TypeError):
        MongeAmpereSolver(problem=3.0).fit()


def test_score_without_exact_solution():
    from mongeampere.cli import parse_problem
    est = MongeAmpereSolver(parse_problem('{"f": 1.0}'), h=0.25).fit()
    with pytest.raises(ValueError):
        est.score([[0.0, 0.0]])


def test_docstring_example():
    res = doctest.testmod(est_mod, verbose=False)
    assert res.attempted > 0 and res.failed == 0
