"""Scikit-learn compatible estimator facade.

Two regressors cover the two training routes: ``ConvexReLU`` solves the
lifted cone-constrained program exactly and maps the solution back to a
network, ``GradientReLU`` runs plain (sub)gradient descent on the original
objective.  Both predict through the resulting ReLU network, expose
``get_params`` / ``set_params`` and validate their inputs, so they slot
into sklearn pipelines and model selection.
"""

from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .arrangement import DEFAULT_CELL_CAP, enumerate_dichotomies
from .certificates import kkt_check
from .convex import solve_dichotomy_program
from .mappings import convex_to_nn
from .nonconvex import TrainConfig, train_gd
from .problem import ProblemInstance
from .validation import check_matrix, check_vector


class ConvexReLU(BaseEstimator, RegressorMixin):
    """Two-layer ReLU regressor trained through its convex lifting.

    Fitting enumerates the activation patterns of the training data, solves
    the cone-constrained group-lasso program and maps the solution to a
    (minimal) network, which is what ``predict`` evaluates on new data.
    """

    def __init__(self, beta=0.1, loss="squared", tol=None, max_iter=200_000,
                 cell_cap=DEFAULT_CELL_CAP):
        self.beta = beta
        self.loss = loss
        self.tol = tol
        self.max_iter = max_iter
        self.cell_cap = cell_cap

    def fit(self, X, y):
        X = check_matrix(X)
        y = check_vector(y, n=X.shape[0])
        instance = ProblemInstance(X=X, y=y, beta=self.beta, loss=self.loss)
        dichotomies = enumerate_dichotomies(instance, cap=self.cell_cap)
        report = solve_dichotomy_program(instance, dichotomies,
                                         tol=self.tol, max_iter=self.max_iter)
        self.instance_ = instance
        self.dichotomies_ = dichotomies
        self.report_ = report
        self.point_ = report.point
        self.objective_ = report.objective
        m = max(self.point_.nonzero_count(), 1)
        self.network_ = convex_to_nn(instance, None, self.point_, m)
        self.n_features_in_ = X.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "network_"):
            raise NotFittedError("this estimator is not fitted yet; call fit first")

    def predict(self, X):
        self._check_fitted()
        return self.network_.predict(check_matrix(X))

    def certify(self, tol=None):
        """KKT certificate of the fitted solution (global optimality)."""
        self._check_fitted()
        return kkt_check(self.instance_, self.dichotomies_, self.point_, tol=tol)


class GradientReLU(BaseEstimator, RegressorMixin):
    """Two-layer ReLU regressor trained by line-search gradient descent."""

    def __init__(self, m=8, beta=0.1, loss="squared", seed=0, step_size=0.5,
                 max_steps=5000, stationarity_tol=1e-8, init_scale=1.0):
        self.m = m
        self.beta = beta
        self.loss = loss
        self.seed = seed
        self.step_size = step_size
        self.max_steps = max_steps
        self.stationarity_tol = stationarity_tol
        self.init_scale = init_scale

    def fit(self, X, y):
        X = check_matrix(X)
        y = check_vector(y, n=X.shape[0])
        instance = ProblemInstance(X=X, y=y, beta=self.beta, loss=self.loss)
        config = TrainConfig(m=self.m, seed=self.seed, step_size=self.step_size,
                             max_steps=self.max_steps,
                             stationarity_tol=self.stationarity_tol,
                             init_scale=self.init_scale)
        self.instance_ = instance
        self.network_, self.trace_ = train_gd(instance, config)
        self.objective_ = float(self.trace_.objectives[-1])
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        if not hasattr(self, "network_"):
            raise NotFittedError("this estimator is not fitted yet; call fit first")
        return self.network_.predict(check_matrix(X))
