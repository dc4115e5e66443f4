import numpy as np
import pytest

from mongeampere.domain import lattice_patch
from mongeampere.envelope import build_envelope
from mongeampere.verify import (FAULTS, SUITES, exact_subdifferential, hull_contains, run_suites)


@pytest.mark.parametrize("name", sorted(SUITES))
def test_quick_suites_pass(name):
    (res,) = run_suites(seed=0, names=[name], quick=True)
    assert res.passed and res.failures == 0 and res.cases > 0
    d = res.as_dict()
    assert type(d["passed"]) is bool and type(d["cases"]) is int


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(10))
def test_seed_stability(seed):
    names = ["monotonicity", "sum-rule", "envelope-certificate", "alexandroff", "brunn-minkowski"]
    assert all(r.passed for r in run_suites(seed=seed, names=names, quick=True))


def test_fault_is_caught():
    assert FAULTS == ("skip-legalization",)
    (res,) = run_suites(seed=0, names=["envelope-certificate"], fault="skip-legalization", quick=True)
    assert not res.passed and "negative jump" in res.detail
    with pytest.raises(ValueError):
        run_suites(fault="bitflip")


def test_exact_subdifferential_and_containment():
    nodes = lattice_patch(7, 1.0)
    mesh = build_envelope(nodes, 0.5 * (nodes.points ** 2).sum(1))
    S = exact_subdifferential(mesh, nodes.n // 2)
    # the square [-1/2, 1/2]^2 under a positive integer scale
    assert len(S) == 4
    s = max(abs(v[0]) for v in S)
    assert set(S) == {(-s, -s), (s, -s), (s, s), (-s, s)}
    assert hull_contains(S, [(0, 0), (s, 0), (s, s)])
    assert not hull_contains(S, [(0, 0), (s + 1, 0)])
    assert hull_contains([(-2 * s, -2 * s), (2 * s, -2 * s), (2 * s, 2 * s), (-2 * s, 2 * s)], S)
