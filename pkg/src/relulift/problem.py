"""Problem instances and training losses.

A :class:`ProblemInstance` bundles the data matrix ``X`` (one sample per
row), the label vector ``y``, the weight-decay strength ``beta`` and the
choice of convex loss.  Every operation in the library takes an instance as
its first argument.

Two losses are supported, both convex and differentiable:

* ``squared``:  ``loss_scale * 0.5 * ||v - y||^2``
* ``logistic``: ``sum_k log(1 + exp(-y_k v_k))``

``loss_scale`` (default 1) rescales the squared loss; the small landscape
demo uses ``loss_scale=2`` so that the fitting term reads ``(1 - v)**2``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimMismatch
from .validation import check_matrix, check_positive, check_vector, readonly

LOSSES = ("squared", "logistic")


class SquaredLoss:
    """``scale * 0.5 * ||v - y||^2`` with gradient ``scale * (v - y)``."""

    def __init__(self, y, scale=1.0):
        self.y = np.asarray(y, dtype=float)
        self.scale = float(scale)

    def value(self, v):
        r = np.asarray(v, dtype=float) - self.y
        return 0.5 * self.scale * float(r @ r)

    def grad(self, v):
        return self.scale * (np.asarray(v, dtype=float) - self.y)

    def hess_diag(self, v):
        return np.full(self.y.shape, self.scale)

    def lipschitz(self):
        # Hessian is scale * I
        return self.scale


class LogisticLoss:
    """``sum_k log(1 + exp(-y_k v_k))``; labels are expected in {-1, +1}."""

    def __init__(self, y):
        self.y = np.asarray(y, dtype=float)

    def value(self, v):
        t = self.y * np.asarray(v, dtype=float)
        # stable log(1 + exp(-t))
        out = np.where(t > 0, np.log1p(np.exp(-np.abs(t))), -t + np.log1p(np.exp(-np.abs(t))))
        return float(np.sum(out))

    def grad(self, v):
        t = self.y * np.asarray(v, dtype=float)
        return -self.y / (1.0 + np.exp(t))

    def hess_diag(self, v):
        t = self.y * np.asarray(v, dtype=float)
        s = 1.0 / (1.0 + np.exp(t))
        return self.y**2 * s * (1.0 - s)

    def lipschitz(self):
        return 0.25 * float(np.max(self.y**2)) if self.y.size else 0.25


@dataclass(frozen=True)
class ProblemInstance:
    """Immutable training problem: data, labels, weight decay, loss choice."""

    X: np.ndarray
    y: np.ndarray
    beta: float
    loss: str = "squared"
    loss_scale: float = 1.0

    def __post_init__(self):
        X = readonly(check_matrix(self.X))
        y = readonly(check_vector(self.y, n=X.shape[0]))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "beta", check_positive(self.beta, "beta"))
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        object.__setattr__(self, "loss_scale", check_positive(self.loss_scale, "loss_scale"))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    def loss_fn(self):
        if self.loss == "squared":
            return SquaredLoss(self.y, scale=self.loss_scale)
        return LogisticLoss(self.y)

    def check_dims(self, d, what):
        if d != self.d:
            raise DimMismatch(f"{what} has dimension {d}, instance has d={self.d}")


def load_instance(x_path, beta, loss="squared", y_path=None, delimiter=","):
    """Build an instance from CSV files.

    ``x_path`` holds one sample per row.  If ``y_path`` is None the label is
    taken from the last column of ``x_path``; otherwise ``y_path`` holds one
    label per row and ``x_path`` only features.
    """
    M = np.loadtxt(x_path, delimiter=delimiter, ndmin=2, dtype=float)
    if y_path is None:
        if M.shape[1] < 2:
            raise DimMismatch("combined CSV needs at least one feature column plus the label")
        X, y = M[:, :-1], M[:, -1]
    else:
        X = M
        y = np.loadtxt(y_path, delimiter=delimiter, dtype=float).reshape(-1)
    return ProblemInstance(X=X, y=y, beta=beta, loss=loss)
