"""KKT certification, stationary-point gaps, optimal-set bounds."""

import numpy as np
import pytest

from relulift import (NeuralNet, NotStationary, ProblemInstance, SplitSpec, TrainConfig,
                      check_global_optimality, clarke_residual, enumerate_dichotomies,
                      enumerate_trichotomies, kkt_check, objective_c, objective_nc,
                      optimal_set_member, solve_dichotomy_program,
                      solve_trichotomy_program, split, subsampled_gap, train_gd,
                      verify_unique_optimum, zero_point_threshold)
from relulift.convex import ConvexPoint, random_feasible_point
from relulift.mappings import psi

from conftest import OPT_REF, random_instance


def test_solver_output_is_certified(planar, planar_cells, planar_solution):
    cert = kkt_check(planar, planar_cells, planar_solution.point)
    assert cert.is_global
    assert cert.stationarity_gap <= cert.tolerance
    assert np.all(cert.dual_norms >= 0.0)
    assert np.max(cert.complementarity) <= cert.tolerance


def test_perturbed_optimum_is_rejected(planar, planar_cells, planar_solution):
    W = planar_solution.point.blocks.copy()
    W[4] += [0.1, 0.0]  # stays inside the cone, leaves the optimum
    cert = kkt_check(planar, planar_cells, ConvexPoint(W, planar_solution.point.arrangement_key))
    assert not cert.is_global
    assert cert.stationarity_gap > cert.tolerance


def test_zero_point_certified_above_threshold(planar, planar_cells):
    beta0 = zero_point_threshold(planar, planar_cells)
    inst = ProblemInstance(X=planar.X, y=planar.y, beta=1.2 * beta0)
    cells = enumerate_dichotomies(inst)
    cert = kkt_check(inst, cells, ConvexPoint(np.zeros((12, 2)), 0))
    assert cert.is_global
    # and below the threshold the origin is not optimal
    inst2 = ProblemInstance(X=planar.X, y=planar.y, beta=0.5 * beta0)
    cert2 = kkt_check(inst2, enumerate_dichotomies(inst2),
                      ConvexPoint(np.zeros((12, 2)), 0))
    assert not cert2.is_global


def test_network_certification_pipeline(planar, planar_cells, planar_solution):
    net = optimal_set_member(planar_solution.point,
                             spec=SplitSpec({0: (0.4, 0.3, 0.3)}), m=4)
    cert = check_global_optimality(planar, net, dichotomies=planar_cells)
    assert cert.is_global
    assert cert.objective_original == pytest.approx(OPT_REF, abs=1e-9)


def test_toy_network_certification(toy1d):
    r = 1.0 / np.sqrt(2.0)
    cert = check_global_optimality(toy1d, NeuralNet([[r]], [r]))
    assert cert.is_global
    assert cert.objective == pytest.approx(0.75, abs=1e-9)


def test_random_network_is_not_certified(planar, planar_cells):
    rng = np.random.default_rng(0)
    net = NeuralNet(rng.standard_normal((4, 2)), rng.standard_normal(4))
    cert = check_global_optimality(planar, net, dichotomies=planar_cells)
    assert not cert.is_global
    assert cert.objective_reduced <= cert.objective_original + 1e-12


def test_suboptimal_but_stationary_shape_is_rejected(planar, planar_cells):
    # a merged-and-mapped point can satisfy its own restricted system yet
    # the full check must compare objectives
    net = NeuralNet([[0.0, 1.0]], [1.0])  # wrong cone entirely
    cert = check_global_optimality(planar, net, dichotomies=planar_cells)
    assert not cert.is_global


# ---------------------------------------------------------------------------
# soundness on random instances


@pytest.mark.parametrize("seed", range(3))
def test_certificate_soundness_random(seed):
    rng = np.random.default_rng(100 + seed)
    inst = random_instance(rng, n_lo=3, n_hi=5, d_lo=2, d_hi=3)
    cells = enumerate_dichotomies(inst)
    rep = solve_dichotomy_program(inst, cells, tol=1e-9)
    cert = kkt_check(inst, cells, rep.point)
    assert cert.is_global
    for _ in range(50):
        point = random_feasible_point(inst, cells, rng)
        assert objective_c(inst, cells, point) >= rep.objective - 1e-8


# ---------------------------------------------------------------------------
# stationary points and the restricted program


def test_subsampled_gap_at_global_endpoint(planar, planar_tris):
    config = TrainConfig(m=5, seed=0, step_size=0.25, max_steps=60000,
                         stationarity_tol=1e-11, init_scale=0.6)
    net, _ = train_gd(planar, config)
    report = subsampled_gap(planar, planar_tris, net, residual_threshold=1e-4)
    assert report.gap <= 1e-5
    assert abs(report.nc_objective - report.optimum_subsampled) <= 1e-4


def test_subsampled_gap_of_mapped_optimum(planar, planar_tris, planar_solution):
    net = psi(planar_solution.point)
    report = subsampled_gap(planar, planar_tris, net)
    assert abs(report.gap) <= 1e-5
    assert abs(report.nc_objective - report.optimum_subsampled) <= 1e-6


def test_subsampled_gap_requires_stationarity(planar, planar_tris):
    rng = np.random.default_rng(1)
    net = NeuralNet(rng.standard_normal((3, 2)), rng.standard_normal(3))
    with pytest.raises(NotStationary):
        subsampled_gap(planar, planar_tris, net, residual_threshold=1e-6)


def test_restricted_stationary_point_gap_is_the_program_gap():
    # two samples; force the network into a single suboptimal cone and
    # compare with the directly solved restricted program
    inst = ProblemInstance(X=[[1.0, 0.0], [0.0, 1.0]], y=[1.0, 1.0], beta=0.1)
    tris = enumerate_trichotomies(inst)
    # stationary point supported on the cone of u = e1 only: fit y_1 alone
    # optimum over that ray: min 0.5(1-c)^2 + 0.5 + beta c -> c = 1 - beta
    c = 1.0 - inst.beta
    root = np.sqrt(c)
    net = NeuralNet([[c / root, 0.0]], [root])
    res = clarke_residual(inst, net)
    assert res.residual_norm <= 1e-10
    report = subsampled_gap(inst, tris, net)
    assert report.gap > 1e-3
    sub = solve_trichotomy_program(inst, tris, subset=report.subset, tol=1e-9)
    full = solve_trichotomy_program(inst, tris, tol=1e-9)
    assert report.gap == pytest.approx(sub.objective - full.objective, abs=1e-7)
    assert report.nc_objective == pytest.approx(sub.objective, abs=1e-7)


# ---------------------------------------------------------------------------
# optimal-set bounds


def test_planar_optimum_is_unique(planar, planar_cells, planar_solution):
    uni = verify_unique_optimum(planar, planar_cells, planar_solution.objective,
                                epsilon=1e-4)
    assert uni.unique
    assert uni.radius_inf <= 1e-4
    # the known optimum sits inside the coordinate box
    W = planar_solution.point.blocks
    assert np.all(W >= uni.lower - 1e-9) and np.all(W <= uni.upper + 1e-9)


def test_symmetric_instance_is_not_unique():
    # two samples on opposite axes with opposite labels: the negative-side
    # mass can live in either of two cones (or split), an optimal segment
    inst = ProblemInstance(X=np.eye(2), y=[1.0, -1.0], beta=0.1)
    cells = enumerate_dichotomies(inst)
    rep = solve_dichotomy_program(inst, cells, tol=1e-10)
    uni = verify_unique_optimum(inst, cells, rep.objective, epsilon=1e-4)
    assert not uni.unique
    # the shiftable mass is c = 1 - beta, so the coordinate range equals it
    assert uni.radius_inf == pytest.approx(1.0 - inst.beta, abs=1e-3)
    # both extreme placements of the negative mass are optimal and boxed:
    # patterns sorted are [00, 01, 10, 11]; the (0, c) vector may sit in
    # the negative block of pattern 01 (index 5) or of pattern 11 (index 7)
    c = 1.0 - inst.beta
    for spot in (5, 7):
        W2 = rep.point.blocks.copy()
        W2[5] = 0.0
        W2[7] = 0.0
        W2[spot] = [0.0, c]
        assert objective_c(inst, cells, W2) == pytest.approx(rep.objective, abs=1e-8)
        assert np.all(W2 >= uni.lower - 1e-6) and np.all(W2 <= uni.upper + 1e-6)


def test_zero_solution_is_trivially_unique(planar, planar_cells):
    beta0 = zero_point_threshold(planar, planar_cells)
    inst = ProblemInstance(X=planar.X, y=planar.y, beta=2.0 * beta0)
    cells = enumerate_dichotomies(inst)
    rep = solve_dichotomy_program(inst, cells, tol=1e-10)
    uni = verify_unique_optimum(inst, cells, rep.objective, epsilon=1e-4)
    assert uni.unique
    assert uni.radius_inf <= 1e-6


def test_certificate_serialization(planar, planar_cells, planar_solution):
    cert = kkt_check(planar, planar_cells, planar_solution.point)
    d = cert.to_dict()
    assert d["schema"] == 1 and d["verdict"] == "global"
    assert len(d["per_block"]) == 12
