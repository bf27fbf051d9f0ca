"""Instances, losses and CSV loading."""

import numpy as np
import pytest

from relulift import DimMismatch, ProblemInstance, load_instance
from relulift.problem import LogisticLoss, SquaredLoss


def test_instance_validation():
    with pytest.raises(ValueError):
        ProblemInstance(X=[[1.0]], y=[1.0], beta=0.0)
    with pytest.raises(DimMismatch):
        ProblemInstance(X=[[1.0], [2.0]], y=[1.0], beta=0.1)
    with pytest.raises(ValueError):
        ProblemInstance(X=[[np.nan]], y=[1.0], beta=0.1)
    with pytest.raises(ValueError):
        ProblemInstance(X=[[1.0]], y=[1.0], beta=0.1, loss="hinge")


def test_instance_is_immutable():
    inst = ProblemInstance(X=[[1.0, 2.0]], y=[0.5], beta=0.1)
    with pytest.raises(ValueError):
        inst.X[0, 0] = 3.0


def test_squared_loss_value_and_gradient():
    y = np.array([1.0, -2.0])
    loss = SquaredLoss(y)
    v = np.array([0.5, 0.5])
    assert loss.value(v) == pytest.approx(0.5 * (0.25 + 6.25))
    assert np.allclose(loss.grad(v), v - y)
    # finite differences
    eps = 1e-6
    for k in range(2):
        e = np.zeros(2)
        e[k] = eps
        fd = (loss.value(v + e) - loss.value(v - e)) / (2 * eps)
        assert fd == pytest.approx(loss.grad(v)[k], abs=1e-6)


def test_logistic_loss_gradient_matches_finite_differences():
    y = np.array([1.0, -1.0, 1.0])
    loss = LogisticLoss(y)
    rng = np.random.default_rng(0)
    v = rng.standard_normal(3)
    eps = 1e-6
    for k in range(3):
        e = np.zeros(3)
        e[k] = eps
        fd = (loss.value(v + e) - loss.value(v - e)) / (2 * eps)
        assert fd == pytest.approx(loss.grad(v)[k], abs=1e-6)
    assert loss.value(np.zeros(3)) == pytest.approx(3 * np.log(2.0))


def test_loss_scale_doubles_squared_loss():
    inst = ProblemInstance(X=[[1.0]], y=[1.0], beta=1.0, loss="squared", loss_scale=2.0)
    loss = inst.loss_fn()
    assert loss.value(np.zeros(1)) == pytest.approx(1.0)  # (1 - 0)^2


def test_load_instance_combined_and_split(tmp_path):
    combined = tmp_path / "data.csv"
    combined.write_text("1.0,0.0,1.0\n0.0,1.0,0.0\n1.0,1.0,0.0\n")
    inst = load_instance(combined, beta=0.1)
    assert inst.n == 3 and inst.d == 2
    assert np.allclose(inst.y, [1.0, 0.0, 0.0])

    xfile = tmp_path / "X.csv"
    yfile = tmp_path / "y.csv"
    xfile.write_text("1.0,0.0\n0.0,1.0\n")
    yfile.write_text("1.0\n-1.0\n")
    inst2 = load_instance(xfile, beta=0.2, loss="logistic", y_path=yfile)
    assert inst2.loss == "logistic"
    assert np.allclose(inst2.y, [1.0, -1.0])
