"""Sklearn-facing estimators."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from relulift import ConvexReLU, GradientReLU

from conftest import EX_BETA, EX_X, EX_Y, OPT_REF


def test_convex_estimator_fit_predict():
    est = ConvexReLU(beta=EX_BETA, tol=1e-10)
    est.fit(EX_X, EX_Y)
    assert est.objective_ == pytest.approx(OPT_REF, abs=1e-9)
    pred = est.predict(EX_X)
    assert pred.shape == (3,)
    assert np.allclose(pred, est.network_.predict(np.asarray(EX_X)))
    cert = est.certify()
    assert cert.is_global


def test_convex_estimator_params_round_trip():
    est = ConvexReLU(beta=0.3, loss="logistic", max_iter=1234)
    params = est.get_params()
    assert params["beta"] == 0.3 and params["loss"] == "logistic"
    twin = clone(est)
    assert twin.get_params() == params


def test_unfitted_estimators_raise():
    with pytest.raises(NotFittedError):
        ConvexReLU().predict([[1.0, 0.0]])
    with pytest.raises(NotFittedError):
        GradientReLU().predict([[1.0, 0.0]])


def test_gradient_estimator_trains():
    est = GradientReLU(m=5, beta=EX_BETA, seed=0, step_size=0.25, max_steps=20000,
                       stationarity_tol=1e-10, init_scale=0.6)
    est.fit(EX_X, EX_Y)
    assert est.objective_ == pytest.approx(OPT_REF, abs=1e-6)
    assert est.predict(EX_X).shape == (3,)
    # the two training routes agree on this instance
    ref = ConvexReLU(beta=EX_BETA, tol=1e-9).fit(EX_X, EX_Y)
    assert est.objective_ == pytest.approx(ref.objective_, abs=1e-6)


def test_estimators_score_like_regressors():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((6, 2))
    y = np.maximum(X @ [1.0, -0.5], 0.0)
    est = ConvexReLU(beta=0.01).fit(X, y)
    assert est.score(X, y) > 0.9
