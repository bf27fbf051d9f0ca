"""The lifted convex programs: objectives, prox pieces, solver."""

import numpy as np
import pytest
from scipy.optimize import minimize

from relulift import (InfeasiblePoint, ProblemInstance, enumerate_dichotomies,
                      enumerate_trichotomies, group_soft_threshold, objective_c,
                      objective_tri, project_cone, solve_dichotomy_program,
                      solve_trichotomy_program, zero_point_threshold)
from relulift.convex import ConvexPoint, count_nonzero_blocks, random_feasible_point

from conftest import OPT_REF, W5_REF, random_instance


# ---------------------------------------------------------------------------
# objective


def test_toy_objective_examples(toy1d):
    cells = enumerate_dichotomies(toy1d)
    W = np.zeros((4, 1))
    W[1, 0] = 0.5  # the positive block of pattern [1]
    assert objective_c(toy1d, cells, W) == pytest.approx(0.75, abs=1e-12)
    assert objective_c(toy1d, cells, np.zeros((4, 1))) == pytest.approx(1.0, abs=1e-12)


def test_objective_rejects_infeasible_points(planar, planar_cells):
    W = np.zeros((12, 2))
    W[0] = [1.0, 1.0]  # pattern [0,0,0] demands Xw <= 0
    with pytest.raises(InfeasiblePoint):
        objective_c(planar, planar_cells, W)


def test_planar_single_block_objective_matches_solver(planar, planar_cells,
                                                      planar_solution):
    W = np.zeros((12, 2))
    W[4] = [0.86, -0.79]
    val = objective_c(planar, planar_cells, W)
    assert val == pytest.approx(planar_solution.objective, abs=1e-2)


# ---------------------------------------------------------------------------
# prox pieces


def test_group_soft_threshold_examples():
    assert np.allclose(group_soft_threshold(np.array([3.0, 4.0]), 2.5), [1.5, 2.0])
    assert np.allclose(group_soft_threshold(np.array([1.0, 1.0]), 5.0), [0.0, 0.0])
    w = np.array([0.3, -0.7])
    assert np.allclose(group_soft_threshold(w, 0.0), w)


def test_group_soft_threshold_is_the_prox():
    # minimizer of tau ||x|| + 0.5 ||x - w||^2, checked by local perturbation
    rng = np.random.default_rng(0)
    for _ in range(20):
        w = rng.standard_normal(3) * 2
        tau = float(rng.uniform(0.1, 2.0))
        x = group_soft_threshold(w, tau)
        f = lambda z: tau * np.linalg.norm(z) + 0.5 * np.sum((z - w) ** 2)
        fx = f(x)
        for _ in range(30):
            assert fx <= f(x + 0.01 * rng.standard_normal(3)) + 1e-12


def test_project_cone_examples():
    v = np.array([0.5, 0.25])
    halfspaces = np.array([[1.0, 0.0], [1.0, 1.0]])
    assert np.allclose(project_cone(halfspaces, v), v)  # already inside
    assert np.allclose(project_cone(np.array([[1.0]]), np.array([-3.0])), [0.0])
    got = project_cone(halfspaces, np.array([-1.0, -1.0]), tol=1e-12)
    # oracle: constrained quadratic program
    ref = minimize(lambda z: np.sum((z - [-1.0, -1.0]) ** 2), x0=[0.1, 0.1],
                   constraints=[{"type": "ineq", "fun": lambda z, h=h: h @ z}
                                for h in halfspaces])
    assert np.allclose(got, ref.x, atol=1e-6)
    assert np.allclose(got, [0.0, 0.0], atol=1e-10)


def test_project_cone_optimality_inequality():
    # <v - P(v), x - P(v)> <= 0 for cone members x
    rng = np.random.default_rng(5)
    halfspaces = rng.standard_normal((4, 3))
    for _ in range(10):
        v = rng.standard_normal(3) * 2
        px = project_cone(halfspaces, v, tol=1e-12)
        for _ in range(100):
            cand = rng.standard_normal(3)
            member = project_cone(halfspaces, cand, tol=1e-12)
            assert (v - px) @ (member - px) <= 1e-8


def test_project_cone_idempotent_and_handles_equalities():
    halfspaces = np.array([[0.0, 1.0, 0.0]])
    equalities = np.array([[1.0, 0.0, 0.0]])
    v = np.array([2.0, -1.5, 0.3])
    px = project_cone(halfspaces, v, tol=1e-12, equalities=equalities)
    assert abs(px[0]) < 1e-10 and px[1] >= -1e-12 and px[2] == pytest.approx(0.3)
    again = project_cone(halfspaces, px, tol=1e-12, equalities=equalities)
    assert np.allclose(px, again, atol=2e-12)


# ---------------------------------------------------------------------------
# solver


def test_toy_solve(toy1d):
    cells = enumerate_dichotomies(toy1d)
    rep = solve_dichotomy_program(toy1d, cells, tol=1e-10)
    assert rep.converged
    assert rep.objective == pytest.approx(0.75, abs=1e-6)
    W = rep.point.blocks
    assert W[1, 0] == pytest.approx(0.5, abs=1e-4)
    assert np.max(np.abs(np.delete(W, 1, axis=0))) < 1e-4


def test_planar_solve_unique_block(planar, planar_solution):
    W = planar_solution.point.blocks
    nz = [i for i in range(12) if np.linalg.norm(W[i]) > 1e-8]
    assert nz == [4]  # 1-based block index 5
    assert np.max(np.abs(W[4] - [0.86, -0.79])) < 0.01
    assert np.max(np.abs(W[4] - W5_REF)) < 1e-8
    assert planar_solution.objective == pytest.approx(OPT_REF, abs=1e-10)


def test_large_penalty_gives_zero_solution(planar, planar_cells):
    beta0 = zero_point_threshold(planar, planar_cells)
    inst = ProblemInstance(X=planar.X, y=planar.y, beta=1.5 * beta0)
    cells = enumerate_dichotomies(inst)
    rep = solve_dichotomy_program(inst, cells, tol=1e-10)
    assert rep.converged
    assert np.max(np.abs(rep.point.blocks)) == 0.0


def test_partition_program_matches_pattern_program(planar, planar_cells, planar_tris,
                                                   planar_solution):
    rep = solve_trichotomy_program(planar, planar_tris, tol=1e-10)
    assert rep.converged
    assert rep.objective == pytest.approx(planar_solution.objective, abs=1e-5)


def test_partition_program_subsets(planar, planar_tris, planar_solution):
    # empty subset: no variables, objective loss(0)
    rep0 = solve_trichotomy_program(planar, planar_tris, subset=[])
    assert rep0.objective == pytest.approx(0.5 * np.sum(planar.y**2), abs=1e-12)
    # the partition holding the optimum is enough on its own
    sig = np.sign(planar.X @ W5_REF).astype(int)
    jstar = next(t.index for t in planar_tris if list(t.signs) == list(sig))
    rep1 = solve_trichotomy_program(planar, planar_tris, subset=[jstar], tol=1e-10)
    assert rep1.objective == pytest.approx(planar_solution.objective, abs=1e-5)


def test_subset_monotonicity(planar, planar_tris):
    rng = np.random.default_rng(4)
    q = len(planar_tris)
    full = solve_trichotomy_program(planar, planar_tris, tol=1e-9).objective
    prev = solve_trichotomy_program(planar, planar_tris, subset=[]).objective
    chosen = []
    order = list(rng.permutation(q) + 1)
    for j in order[:5]:
        chosen.append(int(j))
        val = solve_trichotomy_program(planar, planar_tris, subset=chosen,
                                       tol=1e-9).objective
        assert val <= prev + 1e-7
        assert val >= full - 1e-7
        prev = val


def test_solver_lower_bounds_random_feasible_points(planar, planar_cells,
                                                    planar_solution):
    rng = np.random.default_rng(6)
    for _ in range(50):
        point = random_feasible_point(planar, planar_cells, rng)
        assert objective_c(planar, planar_cells, point) >= planar_solution.objective - 1e-9


@pytest.mark.parametrize("loss", ["squared", "logistic"])
def test_solver_agrees_with_reference_solver(loss):
    cvxpy = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(11 if loss == "squared" else 12)
    for _ in range(3):
        inst = random_instance(rng, n_lo=3, n_hi=5, d_lo=2, d_hi=3, loss=loss)
        cells = enumerate_dichotomies(inst)
        rep = solve_dichotomy_program(inst, cells, tol=1e-9)
        assert rep.converged
        p = len(cells) // 2
        Ws = [cvxpy.Variable(inst.d) for _ in range(2 * p)]
        pred = 0
        reg = 0
        cons = []
        for i in range(2 * p):
            s = cells[i].pattern.astype(float)
            sgn = 1.0 if i < p else -1.0
            pred = pred + sgn * cvxpy.multiply(s, inst.X @ Ws[i])
            reg = reg + cvxpy.norm(Ws[i], 2)
            cons.append(cvxpy.multiply(2 * s - 1, inst.X @ Ws[i]) >= 0)
        if loss == "squared":
            fit = 0.5 * cvxpy.sum_squares(pred - inst.y)
        else:
            fit = cvxpy.sum(cvxpy.logistic(cvxpy.multiply(-inst.y, pred)))
        prob = cvxpy.Problem(cvxpy.Minimize(fit + inst.beta * reg), cons)
        ref = prob.solve(solver=cvxpy.CLARABEL)
        assert rep.objective == pytest.approx(ref, abs=5e-6)
        assert rep.objective <= ref + 5e-7  # we should never be worse


def test_nonzero_block_count():
    W = np.zeros((4, 2))
    W[1] = [1.0, 0.0]
    W[3] = [1e-12, 0.0]
    assert count_nonzero_blocks(W) == 1


def test_max_iter_returns_best_iterate_unconverged(planar, planar_cells):
    rep = solve_dichotomy_program(planar, planar_cells, tol=1e-12, max_iter=3)
    assert not rep.converged
    assert rep.iterations == 3
    assert np.isfinite(rep.objective)


def test_report_serialization(planar_solution):
    d = planar_solution.to_dict()
    assert d["schema"] == 1
    assert len(d["blocks"]) == 12
    assert d["converged"] is True
