"""Explicit continuous paths through the training landscape.

Every path here is a closed-form, per-segment parametrization ``t in [0, 1]
-> network``; grid sampling is only a test device.  The building blocks:

* merging positively colinear same-cone neurons (constant objective),
* rescaling to ``||u|| = |alpha|`` then aligning same-cone neurons
  (non-increasing, strictly decreasing where the property is violated),
* support sparsification to at most ``n + 1`` nonzero neurons by convex-
  combination carving (constant objective),
* a square-root blend from any sparse network into an optimal one
  (non-increasing, since it makes predictions and penalty affine in ``t``).

Composing them yields, for wide enough networks, a non-increasing path
from any network to a global optimum.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NotNearlyMinimal, NotScaled, TooFewNeurons
from .mappings import _cone_groups, _nonzero, is_nearly_minimal, is_scaled, merge
from .network import NeuralNet
from .nonconvex import align_neurons, objective_nc, scale_neurons

CLAIM_CONSTANT = "constant"
CLAIM_NON_INCREASING = "non_increasing"
CLAIM_STRICT = "strictly_decreasing"


@dataclass(frozen=True)
class Path:
    """A continuous network path with a declared objective behaviour."""

    evaluate: object            # callable t -> NeuralNet
    segments: tuple             # ((t0, t1, formula_id), ...)
    claim: str
    start: NeuralNet
    end: NeuralNet

    def sample(self, instance, grid=101):
        ts = np.linspace(0.0, 1.0, grid)
        return ts, np.array([objective_nc(instance, self.evaluate(t)) for t in ts])


def _blend_neuron(a_vec, b_vec, sign, t):
    """Unit-speed blend of two positively colinear lifted vectors, returned
    as a scaled neuron."""
    mix = (1.0 - t) * a_vec + t * b_vec
    nrm = float(np.linalg.norm(mix))
    if nrm == 0.0:
        return np.zeros_like(mix), 0.0
    root = np.sqrt(nrm)
    return mix / root, sign * root


def constant_path(net):
    return Path(evaluate=lambda t: net, segments=((0.0, 1.0, "constant"),),
                claim=CLAIM_CONSTANT, start=net, end=net)


def path_merge(instance, net):
    """Constant-objective path from a nearly minimal network to its merged
    (minimal) form: the lead neuron of each cone absorbs the aggregate
    while the others shrink like ``sqrt(1 - t)``."""
    if not is_nearly_minimal(instance, net):
        raise NotNearlyMinimal("path_merge requires a nearly minimal network")
    groups = _cone_groups(instance, net)
    merged = merge(instance, net)
    plans = []
    for idx in groups.values():
        agg = np.zeros(instance.d)
        for i in idx:
            agg += abs(net.alpha[i]) * net.U[i]
        sign = 1.0 if net.alpha[idx[0]] > 0 else -1.0
        plans.append((idx, agg, sign))

    def evaluate(t):
        U = net.U.copy()
        a = net.alpha.copy()
        for idx, agg, sign in plans:
            lead = idx[0]
            u, al = _blend_neuron(abs(net.alpha[lead]) * net.U[lead], agg, sign, t)
            U[lead], a[lead] = u, al
            for i in idx[1:]:
                U[i] = np.sqrt(1.0 - t) * net.U[i]
                a[i] = np.sqrt(1.0 - t) * net.alpha[i]
        return NeuralNet(U, a)

    return Path(evaluate=evaluate, segments=((0.0, 1.0, "merge_blend"),),
                claim=CLAIM_CONSTANT, start=net, end=merged)


def path_to_nearly_minimal(instance, net):
    """Two-segment non-increasing path: rescale every neuron to ``||u|| =
    |alpha|`` (strictly decreasing while unscaled), then align same-cone
    neurons with their aggregate (strictly decreasing while non-colinear).
    """
    scaled = scale_neurons(net)
    aligned = align_neurons(instance, scaled)
    groups = _cone_groups(instance, scaled)
    plans = []
    for idx in groups.values():
        w = np.zeros(instance.d)
        for i in idx:
            w += abs(scaled.alpha[i]) * scaled.U[i]
        plans.append((idx, w / len(idx)))

    def eval_scale(s):
        U = net.U.copy()
        a = net.alpha.copy()
        for i in range(net.m):
            nu = float(np.linalg.norm(net.U[i]))
            al = net.alpha[i]
            if nu == 0.0 or al == 0.0:
                U[i] = (1.0 - s) * net.U[i]
                a[i] = (1.0 - s) * al
                continue
            gam = np.sqrt(abs(al)) + s * (np.sqrt(nu) - np.sqrt(abs(al)))
            U[i] = np.sqrt(abs(al)) * net.U[i] / gam
            a[i] = gam * al / np.sqrt(abs(al))
        return NeuralNet(U, a)

    def eval_align(s):
        U = scaled.U.copy()
        a = scaled.alpha.copy()
        for idx, share in plans:
            for i in idx:
                mix = (1.0 - s) * abs(scaled.alpha[i]) * scaled.U[i] + s * share
                u, al = _blend_neuron(mix, mix, np.sign(scaled.alpha[i]), 0.0)
                U[i], a[i] = u, al
        return NeuralNet(U, a)

    def evaluate(t):
        if t <= 0.5:
            return eval_scale(2.0 * t)
        return eval_align(2.0 * t - 1.0)

    seg1 = "rescale" + ("" if is_scaled(net) else "_strict")
    seg2 = "align" + ("" if is_nearly_minimal(instance, scaled) else "_strict")
    return Path(evaluate=evaluate,
                segments=((0.0, 0.5, seg1), (0.5, 1.0, seg2)),
                claim=CLAIM_NON_INCREASING, start=net, end=aligned)


def _caratheodory_support(instance, net):
    """Convex-combination carving of the prediction onto at most ``n + 1``
    neurons.  Input must be scaled; returns the reduced network (same
    slots, eliminated neurons zeroed)."""
    nz = _nonzero(net)
    n = instance.n
    if len(nz) <= n + 1:
        return net
    norms = {i: float(np.linalg.norm(net.U[i])) for i in nz}
    total = sum(norms[i] * abs(net.alpha[i]) for i in nz)
    lam = {i: norms[i] * abs(net.alpha[i]) / total for i in nz}
    zs = {i: np.sign(net.alpha[i]) * total * np.maximum(instance.X @ (net.U[i] / norms[i]), 0.0)
          for i in nz}
    active = list(nz)
    while len(active) > n + 1:
        M = np.vstack([np.array([zs[i] for i in active]).T, np.ones(len(active))])
        _, _, Vt = np.linalg.svd(M)
        c = Vt[-1]
        if not np.any(c > 1e-14):
            c = -c
        ratios = [(lam[active[k]] / c[k], k) for k in range(len(active)) if c[k] > 1e-14]
        gamma, kmin = min(ratios)
        for k, i in enumerate(active):
            lam[i] = max(lam[i] - gamma * c[k], 0.0)
        lam[active[kmin]] = 0.0
        active = [i for i in active if lam[i] > 0.0]
    U = np.zeros_like(net.U)
    a = np.zeros_like(net.alpha)
    for i in active:
        nu = lam[i] * total / norms[i]
        U[i] = np.sqrt(nu / norms[i]) * net.U[i]
        a[i] = np.sign(net.alpha[i]) * float(np.linalg.norm(U[i]))
    return NeuralNet(U, a)


def caratheodory_reduce(instance, net):
    """Sparsify a scaled network to at most ``n + 1`` nonzero neurons along
    a constant-objective path.

    Kept neurons blend toward their reweighted versions (positively
    colinear, so the penalty is affine in ``t``); eliminated neurons shrink
    like ``sqrt(1 - t)``.  Predictions and penalty are preserved exactly.
    """
    if not is_scaled(net):
        raise NotScaled("support reduction requires a scaled network")
    if net.m < instance.n + 1:
        raise TooFewNeurons(f"need at least n+1 = {instance.n + 1} neuron slots, have {net.m}")
    reduced = _caratheodory_support(instance, net)
    if reduced is net:
        return net, constant_path(net)

    def evaluate(t):
        U = net.U.copy()
        a = net.alpha.copy()
        for i in range(net.m):
            src = abs(net.alpha[i]) * net.U[i]
            dst = abs(reduced.alpha[i]) * reduced.U[i]
            if np.linalg.norm(dst) > 0.0 or np.linalg.norm(src) > 0.0:
                sign = np.sign(net.alpha[i]) if net.alpha[i] != 0 else np.sign(reduced.alpha[i])
                U[i], a[i] = _blend_neuron(src, dst, sign, t)
        return NeuralNet(U, a)

    path = Path(evaluate=evaluate, segments=((0.0, 1.0, "support_carve"),),
                claim=CLAIM_CONSTANT, start=net, end=reduced)
    return reduced, path


def path_to_global(instance, net, net_star):
    """Non-increasing path from ``net`` to a certified optimal network.

    Three stages: reduce to nearly minimal (non-increasing), carve the
    support to at most ``n + 1`` neurons (constant), then square-root blend
    into the optimum placed on disjoint slots (predictions and penalty both
    affine in ``t``, and the endpoint is the global minimum, so the blend
    cannot increase).  Requires ``m >= n + 1 + m*`` slots where ``m*`` is
    the optimum's nonzero count.
    """
    star_nz = _nonzero(net_star)
    m_star = len(star_nz)
    need = instance.n + 1 + m_star
    if net.m < need:
        raise TooFewNeurons(f"need at least n+1+m* = {need} neuron slots, have {net.m}")
    p1 = path_to_nearly_minimal(instance, net)
    reduced, p2 = caratheodory_reduce(instance, p1.end)
    taken = set(_nonzero(reduced))
    free = [i for i in range(net.m) if i not in taken]
    slots = free[:m_star]

    def eval_blend(s):
        U = np.sqrt(1.0 - s) * reduced.U
        a = np.sqrt(1.0 - s) * reduced.alpha
        U = U.copy()
        a = a.copy()
        for slot, j in zip(slots, star_nz):
            U[slot] = np.sqrt(s) * net_star.U[j]
            a[slot] = np.sqrt(s) * net_star.alpha[j]
        return NeuralNet(U, a)

    end = eval_blend(1.0)

    def evaluate(t):
        if t <= 1.0 / 3.0:
            return p1.evaluate(3.0 * t)
        if t <= 2.0 / 3.0:
            return p2.evaluate(3.0 * t - 1.0)
        return eval_blend(3.0 * t - 2.0)

    segments = tuple((t0 / 3.0, t1 / 3.0, fid) for t0, t1, fid in p1.segments)
    segments += tuple((1 / 3 + t0 / 3.0, 1 / 3 + t1 / 3.0, fid) for t0, t1, fid in p2.segments)
    segments += ((2 / 3, 1.0, "sqrt_blend"),)
    return Path(evaluate=evaluate, segments=segments, claim=CLAIM_NON_INCREASING,
                start=net, end=end)


def interpolate_realization(instance, net0, net1, lam, m):
    """A single network realizing ``lam * yhat(net0~) + (1 - lam) *
    yhat(net1~)`` where ``net~`` are the carved forms of the inputs.

    Rescaling and carving both preserve predictions exactly, so the output
    realizes the convex combination of the inputs' prediction vectors.
    Needs ``m >= 2 (n + 1)`` slots.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must lie in [0, 1]")
    n = instance.n
    if m < 2 * (n + 1):
        raise TooFewNeurons(f"need at least 2(n+1) = {2 * (n + 1)} neuron slots, have {m}")
    parts = []
    for net, weight in ((net0, lam), (net1, 1.0 - lam)):
        tilde = _caratheodory_support(instance, scale_neurons(net))
        root = np.sqrt(weight)
        for i in _nonzero(tilde):
            parts.append((root * tilde.U[i], root * tilde.alpha[i]))
    if len(parts) > m:
        raise TooFewNeurons(f"{len(parts)} pieces do not fit in {m} slots")
    U = np.zeros((m, instance.d))
    a = np.zeros(m)
    for i, (u, al) in enumerate(parts):
        U[i] = u
        a[i] = al
    return NeuralNet(U, a)
