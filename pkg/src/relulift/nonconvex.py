"""The nonsmooth training objective and first-order tooling around it.

Trains ``loss(sum_i relu(X u_i) alpha_i) + beta/2 * sum_i (||u_i||^2 +
alpha_i^2)`` by backtracking-line-search (sub)gradient descent, measures
Clarke stationarity exactly (minimizing over the admissible ReLU
subgradient selections on boundary rows), and implements the two
objective-decreasing reductions: rescaling every neuron to ``||u|| =
|alpha|`` and aligning same-cone neurons with their aggregate direction.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import lsq_linear

from .errors import NonFiniteLoss, NotScaled
from .mappings import _cone_groups, _nonzero, is_scaled
from .network import NeuralNet
from .validation import check_positive, readonly

_BOUNDARY_REL_TOL = 1e-10


@dataclass(frozen=True)
class TrainConfig:
    m: int
    seed: int = 0
    step_size: float = 0.5
    max_steps: int = 5000
    stationarity_tol: float = 1e-8
    init_scale: float = 1.0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be at least 1")
        check_positive(self.step_size, "step_size")
        check_positive(self.init_scale, "init_scale")


@dataclass(frozen=True)
class TrainTrace:
    objectives: np.ndarray
    grad_norms: np.ndarray
    steps: int
    stop_reason: str

    def __post_init__(self):
        object.__setattr__(self, "objectives", readonly(np.asarray(self.objectives, dtype=float)))
        object.__setattr__(self, "grad_norms", readonly(np.asarray(self.grad_norms, dtype=float)))


@dataclass(frozen=True)
class ClarkeResidual:
    """Aggregate optimality residual of the stationarity system.

    ``selections`` holds, per neuron, the minimizing subgradient weights
    (in [0, 1]) for the rows where ``X u`` sits exactly on the kink;
    ``grad_outer`` is the outer-weight equation value per neuron.
    """

    residual_norm: float
    per_neuron: np.ndarray
    selections: tuple
    grad_outer: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "per_neuron", readonly(np.asarray(self.per_neuron, dtype=float)))
        object.__setattr__(self, "grad_outer", readonly(np.asarray(self.grad_outer, dtype=float)))


def predictions(instance, net):
    instance.check_dims(net.d, "network")
    return net.predict(instance.X)


def objective_nc(instance, net):
    """Training objective: loss of the predictions plus weight decay."""
    loss = instance.loss_fn()
    reg = 0.5 * instance.beta * (float(np.sum(net.U**2)) + float(net.alpha @ net.alpha))
    return loss.value(predictions(instance, net)) + reg


def _gradient(instance, net, loss):
    """(Sub)gradient with the convention that relu' vanishes at 0."""
    Z = instance.X @ net.U.T  # (n, m)
    act = np.maximum(Z, 0.0)
    g = loss.grad(act @ net.alpha)
    mask = (Z > 0.0).astype(float)
    gU = (mask * g[:, None]).T @ instance.X * net.alpha[:, None] + instance.beta * net.U
    ga = act.T @ g + instance.beta * net.alpha
    return gU, ga


def train_gd(instance, config):
    """Deterministic gradient descent with backtracking line search.

    Neurons start uniformly on a sphere of radius ``init_scale`` with
    matching-magnitude random-sign outer weights.  Steps are accepted under
    an Armijo decrease test starting from ``step_size`` (growing after easy
    accepts), so the recorded objective trajectory is non-increasing.
    Raises NonFiniteLoss if the objective ever leaves the reals.
    """
    rng = np.random.default_rng(config.seed)
    loss = instance.loss_fn()
    U = rng.standard_normal((config.m, instance.d))
    U *= config.init_scale / np.maximum(np.linalg.norm(U, axis=1, keepdims=True), 1e-300)
    a = config.init_scale * rng.choice([-1.0, 1.0], size=config.m)
    net = NeuralNet(U, a)

    objs = []
    gnorms = []
    obj = objective_nc(instance, net)
    if not np.isfinite(obj):
        raise NonFiniteLoss("objective not finite at initialization")
    eta = config.step_size
    reason = "max_steps"
    steps_done = 0
    window_anchor = obj
    for step in range(config.max_steps):
        gU, ga = _gradient(instance, net, loss)
        gnorm = float(np.sqrt(np.sum(gU**2) + ga @ ga))
        objs.append(obj)
        gnorms.append(gnorm)
        if gnorm <= config.stationarity_tol:
            reason = "stationary"
            break
        if step % 500 == 499:
            if window_anchor - obj <= 1e-15 * (1.0 + abs(obj)):
                reason = "stalled"
                break
            window_anchor = obj
        eta = min(eta * 1.5, 1e3 * config.step_size)
        accepted = False
        for _ in range(60):
            cand = NeuralNet(net.U - eta * gU, net.alpha - eta * ga)
            cand_obj = objective_nc(instance, cand)
            if not np.isfinite(cand_obj):
                raise NonFiniteLoss(f"objective diverged at step {step}")
            if cand_obj <= obj - 1e-4 * eta * gnorm**2:
                net, obj = cand, cand_obj
                accepted = True
                steps_done = step + 1
                break
            eta *= 0.5
        if not accepted:
            reason = "line_search_collapsed"
            break
    # closing trajectory entry for the final iterate (unless already recorded)
    if not objs or objs[-1] != obj:
        gU, ga = _gradient(instance, net, loss)
        objs.append(obj)
        gnorms.append(float(np.sqrt(np.sum(gU**2) + ga @ ga)))
    trace = TrainTrace(objectives=np.array(objs), grad_norms=np.array(gnorms),
                       steps=steps_done, stop_reason=reason)
    return net, trace


def clarke_residual(instance, net):
    """Distance of 0 from the admissible stationarity system.

    For each neuron the inner-weight equation is
    ``beta u + alpha X^T (D + S diag(delta)) lam`` with ``D`` the strict
    positive-row indicator, ``S`` the boundary rows and ``delta in [0,1]``
    free; the reported norm minimizes over ``delta`` (a box-constrained
    least squares per neuron) and aggregates the per-neuron equation
    residuals in l2.
    """
    loss = instance.loss_fn()
    lam = loss.grad(predictions(instance, net))
    per = np.zeros(net.m)
    outer = np.zeros(net.m)
    selections = []
    for j in range(net.m):
        z = instance.X @ net.U[j]
        btol = _BOUNDARY_REL_TOL * (1.0 + float(np.max(np.abs(z))) if z.size else 1.0)
        pos = z > btol
        bnd = np.abs(z) <= btol
        fixed = instance.beta * net.U[j] + net.alpha[j] * (instance.X[pos].T @ lam[pos])
        outer[j] = instance.beta * net.alpha[j] + float(lam @ np.maximum(z, 0.0))
        nb = int(np.sum(bnd))
        if nb == 0 or net.alpha[j] == 0.0:
            delta = np.zeros(nb)
            inner_sq = float(fixed @ fixed)
        else:
            A = net.alpha[j] * instance.X[bnd].T * lam[bnd][None, :]
            res = lsq_linear(A, -fixed, bounds=(0.0, 1.0), tol=1e-14)
            delta = res.x
            r = A @ delta + fixed
            inner_sq = float(r @ r)
        selections.append(readonly(delta))
        per[j] = np.sqrt(inner_sq + outer[j] ** 2)
    return ClarkeResidual(residual_norm=float(np.linalg.norm(per)), per_neuron=per,
                          selections=tuple(selections), grad_outer=outer)


def scale_neurons(net):
    """Rescale every neuron to ``||u|| = |alpha|`` without changing its
    contribution ``relu(X u) alpha``; neurons with a zero factor collapse
    to (0, 0).  The weight-decay penalty never increases."""
    U = net.U.copy()
    a = net.alpha.copy()
    for i in range(net.m):
        nu = float(np.linalg.norm(U[i]))
        if nu == 0.0 or a[i] == 0.0:
            U[i] = 0.0
            a[i] = 0.0
            continue
        root_a = np.sqrt(abs(a[i]))
        root_u = np.sqrt(nu)
        U[i] *= root_a / root_u
        a[i] *= root_u / root_a
    return NeuralNet(U, a)


def align_neurons(instance, net):
    """Replace the neurons of each signed activation cone by copies of the
    cone aggregate ``w = sum |alpha| u``.

    Requires a scaled network.  Predictions are unchanged (all members
    share the activation pattern of ``w``) and the penalty drops to
    ``beta ||w||`` per cone, so the objective never increases; the output
    is nearly minimal by construction.
    """
    if not is_scaled(net):
        raise NotScaled("align_neurons requires a scaled network")
    U = net.U.copy()
    a = net.alpha.copy()
    for idx in _cone_groups(instance, net).values():
        w = np.zeros(instance.d)
        for i in idx:
            w += abs(net.alpha[i]) * net.U[i]
        share = w / len(idx)
        nrm = float(np.linalg.norm(share))
        for i in idx:
            if nrm == 0.0:
                U[i] = 0.0
                a[i] = 0.0
            else:
                root = np.sqrt(nrm)
                U[i] = share / root
                a[i] = np.sign(net.alpha[i]) * root
    return NeuralNet(U, a)
