"""Structural maps between networks and points of the lifted programs.

A network is *scaled* when every neuron satisfies ``||u|| = |alpha|``;
*minimal* when additionally at most one nonzero neuron sits in each signed
activation cone; *nearly minimal* when same-cone neurons are positively
colinear.  These classes carry the whole optimal set: networks map to
feasible blocks (never increasing the objective), feasible blocks map back
to minimal networks (never increasing it either), and splitting / merging
moves within a level set.
"""

import numpy as np

from .arrangement import snap_signs
from .convex import ConvexPoint, count_nonzero_blocks, dichotomy_key
from .errors import NotEnumerated, NotMinimal, NotNearlyMinimal, SpecMismatch, TooFewNeurons
from .network import NeuralNet, SplitSpec

_COLINEAR_TOL = 1e-8
_SCALED_TOL = 1e-8


def _nonzero(net):
    """Indices of neurons contributing anything (nonzero u and alpha)."""
    return [i for i in range(net.m)
            if np.linalg.norm(net.U[i]) > 0.0 and net.alpha[i] != 0.0]


def _cone_key(instance, u, alpha):
    return snap_signs(instance.X @ u).tobytes(), 1 if alpha > 0 else -1


def is_scaled(net, rel_tol=_SCALED_TOL):
    """True iff ``||u_i|| = |alpha_i]`` for every neuron, within tolerance."""
    nu = np.linalg.norm(net.U, axis=1)
    return bool(np.all(np.abs(nu - np.abs(net.alpha)) <= rel_tol * (1.0 + nu)))


def _cone_groups(instance, net):
    groups = {}
    for i in _nonzero(net):
        groups.setdefault(_cone_key(instance, net.U[i], net.alpha[i]), []).append(i)
    return groups


def is_minimal(instance, net):
    """Scaled with at most one nonzero neuron per signed activation cone."""
    if not is_scaled(net):
        return False
    return all(len(idx) == 1 for idx in _cone_groups(instance, net).values())


def is_nearly_minimal(instance, net, colinear_tol=_COLINEAR_TOL):
    """Scaled with all same-cone nonzero neurons positively colinear."""
    if not is_scaled(net):
        return False
    for idx in _cone_groups(instance, net).values():
        dirs = [net.U[i] / np.linalg.norm(net.U[i]) for i in idx]
        for v in dirs[1:]:
            if np.linalg.norm(v - dirs[0]) > colinear_tol:
                return False
    return True


def nn_to_convex(instance, dichotomies, net, require_minimal=False):
    """Assign every nonzero neuron ``(u, alpha)`` to one block of the lifted
    program and return the stacked point ``w_b = sum |alpha| u``.

    A neuron is compatible with every pattern that is 1 on its strictly
    positive rows and 0 on its strictly negative rows; ties on boundary
    rows are broken toward the smallest pattern index, which makes the map
    deterministic.  The result is always feasible and has at most ``m``
    nonzero blocks.
    """
    if require_minimal and not is_minimal(instance, net):
        raise NotMinimal("input network is not minimal")
    p = len(dichotomies) // 2
    P = np.stack([d.pattern for d in dichotomies[:p]]).astype(bool)  # (p, n)
    W = np.zeros((2 * p, instance.d))
    for i in _nonzero(net):
        sig = snap_signs(instance.X @ net.U[i])
        ok = np.all(P[:, sig > 0], axis=1) & np.all(~P[:, sig < 0], axis=1)
        hits = np.nonzero(ok)[0]
        if hits.size == 0:
            raise NotEnumerated("no enumerated pattern is compatible with a neuron")
        b = int(hits[0]) + (0 if net.alpha[i] > 0 else p)
        W[b] += abs(net.alpha[i]) * net.U[i]
    return ConvexPoint(W, dichotomy_key(dichotomies))


def convex_to_nn(instance, trichotomies, point, m):
    """Map a feasible point to a minimal network with ``m`` neuron slots.

    Nonzero blocks on the same side (positive first half / negative second
    half) that share a sign-partition cone are summed into one neuron; each
    group yields ``(g / sqrt(||g||), sign * sqrt(||g||))`` and the rest of
    the slots are zero-padded.  Grouping keys on the exact sign vector of
    each block, so ``trichotomies`` may be None; when given it is only used
    to sanity-check that every sign vector was enumerated.
    """
    blocks = np.atleast_2d(np.asarray(point.blocks if isinstance(point, ConvexPoint) else point,
                                      dtype=float))
    p = blocks.shape[0] // 2
    scale = 1.0 + (float(np.max(np.abs(blocks))) if blocks.size else 0.0)
    known = {t.signs.tobytes() for t in trichotomies} if trichotomies is not None else None
    groups = {}
    for b in range(2 * p):
        w = blocks[b]
        if np.linalg.norm(w) <= 1e-8 * scale:
            continue
        sig = snap_signs(instance.X @ w).tobytes()
        if known is not None and sig not in known:
            raise NotEnumerated("a block's sign vector is missing from the enumeration")
        key = (sig, b < p)
        groups.setdefault(key, np.zeros(instance.d))
        groups[key] = groups[key] + w
    neurons = []
    for (_, positive), g in groups.items():
        nrm = np.linalg.norm(g)
        if nrm == 0.0:
            continue
        root = np.sqrt(nrm)
        neurons.append((g / root, (1.0 if positive else -1.0) * root))
    if len(neurons) > m:
        raise TooFewNeurons(f"{len(neurons)} block groups do not fit in {m} neuron slots")
    U = np.zeros((m, instance.d))
    a = np.zeros(m)
    for i, (u, al) in enumerate(neurons):
        U[i] = u
        a[i] = al
    return NeuralNet(U, a)


def psi(point, m=None):
    """Blockwise optimal-network map: every nonzero block ``w_b`` becomes
    the neuron ``(w_b / sqrt(||w_b||), +-sqrt(||w_b||))`` with the sign of
    its half."""
    blocks = np.atleast_2d(np.asarray(point.blocks if isinstance(point, ConvexPoint) else point,
                                      dtype=float))
    p = blocks.shape[0] // 2
    scale = 1.0 + (float(np.max(np.abs(blocks))) if blocks.size else 0.0)
    neurons = []
    for b in range(2 * p):
        w = blocks[b]
        nrm = np.linalg.norm(w)
        if nrm <= 1e-8 * scale:
            continue
        root = np.sqrt(nrm)
        neurons.append((w / root, (1.0 if b < p else -1.0) * root))
    m = len(neurons) if m is None else int(m)
    if m < len(neurons):
        raise TooFewNeurons(f"{len(neurons)} nonzero blocks do not fit in {m} neuron slots")
    d = blocks.shape[1]
    U = np.zeros((max(m, 1), d))
    a = np.zeros(max(m, 1))
    for i, (u, al) in enumerate(neurons):
        U[i] = u
        a[i] = al
    return NeuralNet(U, a)


def merge(instance, net):
    """Collapse each group of positively colinear same-cone neurons into the
    single aggregate neuron, zeroing the other slots.

    Requires a nearly minimal input; the output is minimal, has the same
    number of slots and exactly the same objective.
    """
    if not is_nearly_minimal(instance, net):
        raise NotNearlyMinimal("merge requires a nearly minimal network")
    out = net
    for idx in _cone_groups(instance, net).values():
        agg = np.zeros(instance.d)
        for i in idx:
            agg += abs(net.alpha[i]) * net.U[i]
        root = np.sqrt(np.linalg.norm(agg))
        sign = 1.0 if net.alpha[idx[0]] > 0 else -1.0
        merged_u = agg / root if root > 0 else np.zeros(instance.d)
        out = out.with_neuron(idx[0], merged_u, sign * np.linalg.norm(merged_u))
        for i in idx[1:]:
            out = out.with_neuron(i, np.zeros(instance.d), 0.0)
    return out


def split(net, spec, m=None):
    """Replace each neuron by its ``sqrt(gamma)``-scaled pieces.

    Predictions and the weight-decay penalty are preserved exactly; a
    minimal input yields a nearly minimal output.
    """
    if not isinstance(spec, SplitSpec):
        spec = SplitSpec(dict(spec))
    pieces = []
    for i in range(net.m):
        for g in spec.gammas(i):
            root = np.sqrt(g)
            pieces.append((root * net.U[i], root * net.alpha[i]))
    m = len(pieces) if m is None else int(m)
    if m < len(pieces):
        raise SpecMismatch(f"{len(pieces)} split pieces do not fit in {m} neuron slots")
    U = np.zeros((m, net.d))
    a = np.zeros(m)
    for i, (u, al) in enumerate(pieces):
        U[i] = u
        a[i] = al
    return NeuralNet(U, a)


def optimal_set_member(point, spec=None, permutation=None, m=None):
    """An element of the optimal set: the blockwise network of an optimal
    point, split by ``spec`` and permuted."""
    net = psi(point, m=None)
    if spec is not None:
        net = split(net, spec, m=m)
    elif m is not None:
        net = split(net, SplitSpec({}), m=m)
    if permutation is not None:
        perm = list(permutation)
        if sorted(perm) != list(range(net.m)):
            raise SpecMismatch("permutation is not a rearrangement of the neuron slots")
        return NeuralNet(net.U[perm], net.alpha[perm])
    return net
