"""Shared fixtures and independent test oracles.

The enumeration oracles here deliberately avoid the library's own LP code:
they scan every candidate pattern / partition and certify it with scipy's
linprog, so enumeration bugs cannot cancel out.
"""

import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from relulift import (ProblemInstance, enumerate_dichotomies, enumerate_trichotomies,
                      solve_dichotomy_program)
from relulift.convex import random_feasible_point
from relulift.mappings import convex_to_nn
from relulift.network import NeuralNet

# reference planar instance: three samples in the plane, one label lit
EX_X = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
EX_Y = [1.0, 0.0, 0.0]
EX_BETA = 0.1
# high-precision optimum of that instance (stationarity system solved by
# Newton to machine precision; cross-checked against an interior-point
# solver) -- the nonzero block sits on the pattern [1, 0, 1]
W5_REF = np.array([0.8586977589768229, -0.7909482191477224])
OPT_REF = 0.1290240792905637
EX_PATTERNS = [[0, 0, 0], [0, 1, 0], [0, 1, 1], [1, 0, 0], [1, 0, 1], [1, 1, 1]]


@pytest.fixture(scope="session")
def planar():
    return ProblemInstance(X=EX_X, y=EX_Y, beta=EX_BETA, loss="squared")


@pytest.fixture(scope="session")
def planar_cells(planar):
    return enumerate_dichotomies(planar)


@pytest.fixture(scope="session")
def planar_tris(planar):
    return enumerate_trichotomies(planar)


@pytest.fixture(scope="session")
def planar_solution(planar, planar_cells):
    report = solve_dichotomy_program(planar, planar_cells, tol=1e-10)
    assert report.converged
    return report


@pytest.fixture(scope="session")
def toy1d():
    # single sample, single feature; fitting term (1 - v)^2, unit decay
    return ProblemInstance(X=[[1.0]], y=[1.0], beta=1.0, loss="squared", loss_scale=2.0)


def random_instance(rng, n_lo=2, n_hi=6, d_lo=1, d_hi=3, loss="squared"):
    n = int(rng.integers(n_lo, n_hi + 1))
    d = int(rng.integers(d_lo, d_hi + 1))
    X = rng.standard_normal((n, d))
    y = rng.standard_normal(n) if loss == "squared" else rng.choice([-1.0, 1.0], size=n)
    beta = float(rng.uniform(0.05, 0.5))
    return ProblemInstance(X=X, y=y, beta=beta, loss=loss)


def oracle_dichotomy_feasible(X, pattern):
    """Scipy-based check that some u realizes ``1(Xu >= 0) == pattern``."""
    n, d = X.shape
    pos = [k for k in range(n) if pattern[k] == 1]
    neg = [k for k in range(n) if pattern[k] == 0]
    for k in range(n):
        if np.allclose(X[k], 0.0) and pattern[k] == 0:
            return False
    neg = [k for k in neg if not np.allclose(X[k], 0.0)]
    if not neg:
        return True
    c = np.zeros(d + 1)
    c[-1] = -1.0
    A_ub = [np.concatenate([-X[k], [0.0]]) for k in pos]
    A_ub += [np.concatenate([X[k], [1.0]]) for k in neg]
    bounds = [(-1, 1)] * d + [(None, 1.0)]
    res = linprog(c, A_ub=np.array(A_ub), b_ub=np.zeros(len(A_ub)), bounds=bounds,
                  method="highs")
    return res.status == 0 and -res.fun > 1e-9


def oracle_trichotomy_feasible(X, signs):
    n, d = X.shape
    pos = [k for k in range(n) if signs[k] > 0]
    zer = [k for k in range(n) if signs[k] == 0]
    neg = [k for k in range(n) if signs[k] < 0]
    if not pos and not neg:
        return True  # u = 0
    c = np.zeros(d + 1)
    c[-1] = -1.0
    A_ub = [np.concatenate([-X[k], [1.0]]) for k in pos]
    A_ub += [np.concatenate([X[k], [1.0]]) for k in neg]
    A_eq = [np.concatenate([X[k], [0.0]]) for k in zer]
    bounds = [(-1, 1)] * d + [(None, 1.0)]
    res = linprog(c, A_ub=np.array(A_ub), b_ub=np.zeros(len(A_ub)),
                  A_eq=np.array(A_eq) if A_eq else None,
                  b_eq=np.zeros(len(A_eq)) if A_eq else None,
                  bounds=bounds, method="highs")
    return res.status == 0 and -res.fun > 1e-9


def oracle_all_dichotomies(X):
    n = X.shape[0]
    out = [s for s in itertools.product([0, 1], repeat=n)
           if oracle_dichotomy_feasible(X, s)]
    return sorted(out)


def oracle_all_trichotomies(X):
    n = X.shape[0]
    out = [s for s in itertools.product([-1, 0, 1], repeat=n)
           if oracle_trichotomy_feasible(X, s)]
    return sorted(out)


def random_scaled_net(rng, m, d, scale=1.0):
    U = rng.standard_normal((m, d)) * scale
    a = np.linalg.norm(U, axis=1) * rng.choice([-1.0, 1.0], size=m)
    return NeuralNet(U, a)


def random_minimal_net(instance, cells, rng, scale=1.0):
    """Minimal network obtained by mapping a random feasible point back."""
    point = random_feasible_point(instance, cells, rng, scale=scale)
    m = max(point.nonzero_count(), 1)
    return convex_to_nn(instance, None, point, m)
