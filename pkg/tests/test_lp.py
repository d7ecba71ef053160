import numpy as np
import pytest
from scipy.optimize import linprog

from relupat.lp import Box, EmptyBox, LinearProgram, LpStatus, feasible_point, max_box, solve, violations
from relupat.affine import polytope_of


def test_wedge_optimum():
    lp = LinearProgram(2, objective=[1.0, 1.0], bounds=[[-4, 4], [-4, 4]])
    lp.add([1, -1], ">", 0)
    lp.add([1, 1], "<=", 0)
    out = solve(lp)
    assert out.status is LpStatus.OPTIMAL
    assert out.value == pytest.approx(0.0, abs=1e-9)
    x = out.point
    assert x[0] - x[1] > 0 and x[0] + x[1] <= 1e-9


def test_infeasible_strict_pair():
    lp = LinearProgram(1)
    lp.add([1], ">", 0)
    lp.add([1], "<=", 0)
    assert solve(lp).status is LpStatus.INFEASIBLE


def test_unbounded():
    lp = LinearProgram(1, objective=[1.0])
    lp.add([1], ">=", 0)
    assert solve(lp).status is LpStatus.UNBOUNDED


def test_matches_highs(rng):
    for _ in range(200):
        n, m = int(rng.integers(1, 5)), int(rng.integers(1, 7))
        A = rng.normal(size=(m, n))
        b = rng.normal(size=m)
        c = rng.normal(size=n)
        lp = LinearProgram(n, objective=c, bounds=np.tile([-3.0, 3.0], (n, 1)))
        for a, r in zip(A, b):
            lp.add(a, "<=", r)
        ours = solve(lp)
        ref = linprog(-c, A_ub=A, b_ub=b, bounds=[(-3, 3)] * n, method="highs")
        assert (ours.status is LpStatus.OPTIMAL) == (ref.status == 0)
        if ref.status == 0:
            assert ours.value == pytest.approx(-ref.fun, abs=1e-6)
            assert not violations(lp, ours.point)


def test_feasible_point_strict():
    x = feasible_point(2, [([1, -1], ">", 0), ([1, 1], "<=", 0)], bounds=[[-4, 4], [-4, 4]])
    assert x is not None and x[0] - x[1] > 0


def test_max_box_in_wedge(fig1, wedge, rng):
    box = max_box(polytope_of(fig1, wedge), [[-4, 4], [-4, 4]])
    assert isinstance(box, Box) and box.widths.sum() > 0
    pts = box.sample(rng, 10000)
    assert np.all(pts[:, 0] - pts[:, 1] > 0) and np.all(pts.sum(axis=1) <= 0)


def test_max_box_empty(fig1):
    from relupat import DecisionPattern
    # the wedge lies in x1 > x2 and x1 + x2 <= 0; the seed box excludes it
    sigma = DecisionPattern({(1, 0): True, (1, 1): False})
    assert max_box(polytope_of(fig1, sigma), [[2, 3], [2, 3]]).is_empty
