"""The dense simplex oracle against scipy's LP solver."""

import numpy as np
import pytest
from scipy.optimize import linprog

from relulift.lp import max_margin, solve_lp


@pytest.mark.parametrize("seed", range(4))
def test_solve_lp_matches_scipy_on_random_problems(seed):
    rng = np.random.default_rng(seed)
    for _ in range(60):
        d = int(rng.integers(1, 5))
        mu = int(rng.integers(1, 7))
        c = rng.standard_normal(d)
        A = np.vstack([rng.standard_normal((mu, d)), np.eye(d), -np.eye(d)])
        b = np.concatenate([rng.standard_normal(mu), np.full(2 * d, 3.0)])
        status, x, val = solve_lp(c, A, b)
        ref = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * d, method="highs")
        if ref.status == 2:
            assert status == "infeasible"
        else:
            assert status == "optimal"
            assert val == pytest.approx(ref.fun, abs=1e-7, rel=1e-7)
            assert np.all(A @ x <= b + 1e-7)


def test_solve_lp_with_equalities():
    rng = np.random.default_rng(1)
    for _ in range(40):
        d = int(rng.integers(2, 5))
        c = rng.standard_normal(d)
        A = np.vstack([np.eye(d), -np.eye(d)])
        b = np.full(2 * d, 2.0)
        E = rng.standard_normal((1, d))
        status, x, val = solve_lp(c, A, b, E, np.zeros(1))
        ref = linprog(c, A_ub=A, b_ub=b, A_eq=E, b_eq=np.zeros(1),
                      bounds=[(None, None)] * d, method="highs")
        assert status == "optimal"
        assert val == pytest.approx(ref.fun, abs=1e-7, rel=1e-7)
        assert abs(E @ x) < 1e-8


def test_max_margin_strict_halfplane():
    # u must satisfy x >= t with |u| <= 1: best margin is 1
    t, u = max_margin(np.array([[1.0, 0.0]]), d=2)
    assert t == pytest.approx(1.0, abs=1e-9)
    assert u[0] == pytest.approx(1.0, abs=1e-9)


def test_max_margin_infeasible_signs():
    # x >= t and -x >= t force t <= 0
    t, _ = max_margin(np.array([[1.0], [-1.0]]), d=1)
    assert t <= 1e-9


def test_max_margin_with_equality():
    # equality pins the first coordinate, margin comes from the second
    t, u = max_margin(np.array([[0.0, 1.0]]), equal=np.array([[1.0, 0.0]]), d=2)
    assert t == pytest.approx(1.0, abs=1e-9)
    assert abs(u[0]) < 1e-9


def test_max_margin_no_strict_rows_is_capped():
    t, u = max_margin(None, closed=np.array([[1.0, 0.0]]), d=2, t_cap=1.0)
    assert t == pytest.approx(1.0, abs=1e-9)
    assert u[0] >= -1e-12
