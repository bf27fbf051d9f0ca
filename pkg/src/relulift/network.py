"""Two-layer ReLU networks as plain value objects.

A network is ``m`` neurons ``(u_i, alpha_i)``; its prediction on a data
matrix is ``sum_i relu(X u_i) alpha_i``.  Instances are immutable and safe
to share; every transformation in the library returns a fresh object.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, SpecMismatch
from .validation import readonly


@dataclass(frozen=True)
class NeuralNet:
    """Weights ``U`` (m x d, one neuron per row) and outer coefficients
    ``alpha`` (length m)."""

    U: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        U = np.atleast_2d(np.asarray(self.U, dtype=float))
        a = np.asarray(self.alpha, dtype=float).reshape(-1)
        if U.shape[0] != a.shape[0]:
            raise DimMismatch(f"{U.shape[0]} weight rows vs {a.shape[0]} outer coefficients")
        if not (np.all(np.isfinite(U)) and np.all(np.isfinite(a))):
            raise DimMismatch("network contains non-finite entries")
        object.__setattr__(self, "U", readonly(U))
        object.__setattr__(self, "alpha", readonly(a))

    @property
    def m(self):
        return self.U.shape[0]

    @property
    def d(self):
        return self.U.shape[1]

    def neurons(self):
        """Iterate over ``(u_i, alpha_i)`` pairs."""
        return zip(self.U, self.alpha)

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        return np.maximum(X @ self.U.T, 0.0) @ self.alpha

    def nonzero_indices(self, rel_tol=1e-12):
        """Neurons whose weight vector or outer coefficient is (numerically)
        nonzero."""
        scale = 1.0 + max(float(np.max(np.abs(self.U), initial=0.0)),
                          float(np.max(np.abs(self.alpha), initial=0.0)))
        nu = np.linalg.norm(self.U, axis=1)
        return [i for i in range(self.m)
                if nu[i] > rel_tol * scale or abs(self.alpha[i]) > rel_tol * scale]

    def with_neuron(self, i, u, alpha):
        U = self.U.copy()
        a = self.alpha.copy()
        U[i] = u
        a[i] = alpha
        return NeuralNet(U, a)

    @staticmethod
    def zeros(m, d):
        return NeuralNet(np.zeros((m, d)), np.zeros(m))

    def to_json(self):
        return json.dumps(
            {"schema": 1,
             "neurons": [{"u": list(u), "alpha": float(a)} for u, a in self.neurons()]})

    @staticmethod
    def from_json(text):
        obj = json.loads(text)
        neurons = obj["neurons"]
        if not neurons:
            raise DimMismatch("network JSON contains no neurons")
        U = np.array([nr["u"] for nr in neurons], dtype=float)
        a = np.array([nr["alpha"] for nr in neurons], dtype=float)
        return NeuralNet(U, a)


@dataclass(frozen=True)
class SplitSpec:
    """Splitting weights per source neuron: ``weights[i]`` is the tuple of
    nonnegative gammas (summing to one) the ``i``-th neuron is split into.

    Neurons absent from ``weights`` are kept as-is (gamma = (1,)).
    """

    weights: dict

    def __post_init__(self):
        clean = {}
        for i, gs in self.weights.items():
            gs = tuple(float(g) for g in gs)
            if any(g < 0 for g in gs):
                raise SpecMismatch(f"negative split weight for neuron {i}")
            if abs(sum(gs) - 1.0) > 1e-12:
                raise SpecMismatch(f"split weights for neuron {i} sum to {sum(gs)}, not 1")
            clean[int(i)] = gs
        object.__setattr__(self, "weights", clean)

    def gammas(self, i):
        return self.weights.get(i, (1.0,))
