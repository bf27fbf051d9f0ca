"""Exact enumeration of the activation-pattern cells induced by a data matrix.

The rows of ``X`` define a central hyperplane arrangement in weight space.
Two families of cells matter here:

* binary patterns ``1(Xu >= 0)`` ("dichotomies"), whose closed solution
  cones gate the lifted convex program, and
* strict sign partitions of the rows into positive / zero / negative
  ("trichotomies"), whose cones classify neurons.

Enumeration is exact: open cells of the arrangement restricted to a linear
subspace are found incrementally (insert one hyperplane at a time, split
cells whose both sides are LP-feasible) and the recursion descends into
every hyperplane to pick up lower-dimensional sign vectors.  Every reported
cell carries an LP-certified witness vector.

Rows equal to zero never constrain anything; by the convention
``1(0 >= 0) = 1`` they contribute a 1 to every binary pattern and sit in the
zero part of every trichotomy.
"""

from dataclasses import dataclass
from math import comb, e as _E

import numpy as np
from scipy.linalg import null_space

from .errors import CapExceeded, NotEnumerated
from .lp import T_MIN, max_margin
from .validation import readonly

DEFAULT_CELL_CAP = 10**6

_GROUP_TOL = 1e-10
_ROW_VANISH_TOL = 1e-11


@dataclass(frozen=True)
class Dichotomy:
    """One binary activation pattern together with its solution cone.

    ``index`` is 1-based and runs over ``[1, 2p]``: entry ``i`` and entry
    ``i + p`` share the same pattern; the first half carries positive outer
    weights, the second half negative ones.
    """

    index: int
    pattern: np.ndarray  # uint8, length n
    positive: bool
    witness: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pattern", readonly(np.asarray(self.pattern, dtype=np.uint8)))
        object.__setattr__(self, "witness", readonly(np.asarray(self.witness, dtype=float)))

    @property
    def signs(self):
        """Constraint row signs: +1 where the pattern is 1, -1 where 0."""
        return 2.0 * self.pattern.astype(float) - 1.0


@dataclass(frozen=True)
class Trichotomy:
    """A realizable strict sign partition of the samples.

    ``signs`` has entries in {-1, 0, +1}; ``witness`` realizes them exactly
    (strictly on the nonzero part, certified by the margin LP).
    """

    index: int
    signs: np.ndarray  # int8, length n
    witness: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "signs", readonly(np.asarray(self.signs, dtype=np.int8)))
        object.__setattr__(self, "witness", readonly(np.asarray(self.witness, dtype=float)))

    @property
    def plus_set(self):
        return frozenset(int(k) for k in np.nonzero(self.signs > 0)[0])

    @property
    def zero_set(self):
        return frozenset(int(k) for k in np.nonzero(self.signs == 0)[0])

    @property
    def minus_set(self):
        return frozenset(int(k) for k in np.nonzero(self.signs < 0)[0])


def snap_signs(z, rel_tol=1e-10):
    """Strict sign vector of ``z`` with a scale-aware dead zone around 0."""
    z = np.asarray(z, dtype=float)
    tol = rel_tol * (1.0 + (np.max(np.abs(z)) if z.size else 0.0))
    out = np.zeros(z.shape, dtype=np.int8)
    out[z > tol] = 1
    out[z < -tol] = -1
    return out


def cover_cell_count(n, r):
    """Exact number of open cells of a generic central arrangement of n
    hyperplanes in rank r: ``2 * sum_{k<r} C(n-1, k)``."""
    return 2 * sum(comb(n - 1, k) for k in range(min(r, n)))


def cover_pattern_bound(n, r):
    """The classical count bound ``2 r (e (n-1) / r)**r`` (meaningful for
    ``n - 1 >= r``)."""
    return 2.0 * r * (_E * (n - 1) / r) ** r


def _face_count_bound(h, r, n):
    """Crude upper bound on the number of faces: choose up to r hyperplanes
    to vanish, count open cells of the rest."""
    total = 0
    for k in range(min(h, r) + 1):
        total += comb(h, k) * max(cover_cell_count(max(h - k, 1), max(r - k, 1)), 1)
    return min(total, 3**n)


def _group_rows(M, row_scale):
    """Group nonzero rows of ``M`` by shared hyperplane.

    Returns ``(groups, zero_rows)`` where each group is
    ``(direction, [(row_index, alignment)])`` with alignment +-1.
    """
    groups = []
    zero_rows = []
    for k in range(M.shape[0]):
        row = M[k]
        nrm = np.linalg.norm(row)
        if nrm <= _ROW_VANISH_TOL * max(1.0, row_scale[k]):
            zero_rows.append(k)
            continue
        u = row / nrm
        placed = False
        for gi, (dirv, members) in enumerate(groups):
            dot = float(u @ dirv)
            if abs(dot) >= 1.0 - _GROUP_TOL:
                members.append((k, 1 if dot > 0 else -1))
                placed = True
                break
        if not placed:
            groups.append((u, [(k, 1)]))
    return groups, zero_rows


def _open_cells(dirs):
    """All open cells of the central arrangement of the given unit normals.

    Incremental construction: cells of the first ``g`` hyperplanes are
    extended one hyperplane at a time; a side survives iff the margin LP
    certifies a strictly feasible point.  Returns a list of
    ``(sign_tuple, witness)`` pairs.
    """
    dim = dirs.shape[1]
    cells = [((), None)]
    for gi in range(dirs.shape[0]):
        new = []
        for signs, wit in cells:
            rows = dirs[: gi + 1]
            for s in (1, -1):
                cand = signs + (s,)
                if wit is not None and s * float(dirs[gi] @ wit) > 10 * T_MIN:
                    new.append((cand, wit))
                    continue
                sgn = np.array(cand, dtype=float)
                t_star, u = max_margin(sgn[:, None] * rows, d=dim)
                if t_star > T_MIN:
                    new.append((cand, u))
        cells = new
    return cells


def _enumerate_faces(X, cap):
    """All realizable sign vectors (faces) of the arrangement of rows of X.

    Yields ``(signs int8 array, witness)`` in a deterministic order; raises
    CapExceeded when more than ``cap`` faces are produced.
    """
    n, d = X.shape
    scale = float(np.max(np.abs(X))) if np.any(X) else 1.0
    Xs = X / scale
    row_scale = np.maximum(np.linalg.norm(Xs, axis=1), 1.0)
    out = []
    seen_flats = set()

    def visit(B):
        XB = Xs @ B if B.shape[1] else np.zeros((n, 0))
        groups, zero_rows = _group_rows(XB, row_scale)
        flat_key = frozenset(zero_rows)
        if flat_key in seen_flats:
            return
        seen_flats.add(flat_key)
        if not groups:
            signs = np.zeros(n, dtype=np.int8)
            witness = B[:, 0].copy() if B.shape[1] else np.zeros(d)
            out.append((signs, witness))
            return
        dirs = np.array([g[0] for g in groups])
        for cell_signs, wit in _open_cells(dirs):
            signs = np.zeros(n, dtype=np.int8)
            for s, (dirv, members) in zip(cell_signs, groups):
                for k, align in members:
                    signs[k] = s * align
            out.append((signs, B @ wit))
            if len(out) > cap:
                raise CapExceeded(f"face count exceeded the cap of {cap}")
        for dirv, _members in groups:
            N = null_space(dirv[None, :])
            if N.shape[1] or B.shape[1] == 1:
                visit(B @ N)

    visit(np.eye(d))
    return out


def enumerate_trichotomies(instance, cap=DEFAULT_CELL_CAP):
    """All realizable positive/zero/negative partitions of the samples.

    The list is sorted lexicographically by sign vector and indexed from 1.
    """
    n, d = instance.n, instance.d
    h = len(_group_rows(instance.X / max(float(np.max(np.abs(instance.X))), 1e-300),
                        np.ones(n))[0])
    r = int(np.linalg.matrix_rank(instance.X)) if np.any(instance.X) else 0
    if r and _face_count_bound(h, r, n) > cap:
        raise CapExceeded(
            f"predicted face count {_face_count_bound(h, r, n)} exceeds the cap of {cap}")
    faces = _enumerate_faces(instance.X, cap)
    faces.sort(key=lambda fw: tuple(int(s) for s in fw[0]))
    return [Trichotomy(index=i + 1, signs=signs, witness=wit)
            for i, (signs, wit) in enumerate(faces)]


def enumerate_dichotomies(instance, cap=DEFAULT_CELL_CAP):
    """All realizable binary patterns ``1(Xu >= 0)`` with their cones.

    Returns ``2p`` entries: the ``p`` distinct patterns sorted
    lexicographically (positive orientation, indices ``1..p``) followed by
    the same patterns with negative orientation (indices ``p+1..2p``).
    """
    n = instance.n
    r = int(np.linalg.matrix_rank(instance.X)) if np.any(instance.X) else 0
    if r and cover_cell_count(n, r) > cap:
        raise CapExceeded(
            f"predicted cell count {cover_cell_count(n, r)} exceeds the cap of {cap}")
    patterns = {}
    for signs, wit in _enumerate_faces(instance.X, cap * (n + 1)):
        pat = (signs >= 0).astype(np.uint8)
        key = pat.tobytes()
        if key not in patterns:
            patterns[key] = (pat, wit)
            if len(patterns) > cap:
                raise CapExceeded(f"pattern count exceeded the cap of {cap}")
    ordered = sorted(patterns.values(), key=lambda pw: tuple(int(b) for b in pw[0]))
    p = len(ordered)
    out = []
    for i, (pat, wit) in enumerate(ordered):
        out.append(Dichotomy(index=i + 1, pattern=pat, positive=True, witness=wit))
    for i, (pat, wit) in enumerate(ordered):
        out.append(Dichotomy(index=p + i + 1, pattern=pat, positive=False, witness=wit))
    return out


def cone_membership(instance, dichotomy, u, rel_tol=1e-10):
    """True iff ``u`` lies in the closed solution cone of the dichotomy."""
    z = instance.X @ np.asarray(u, dtype=float)
    tol = rel_tol * (1.0 + (np.max(np.abs(z)) if z.size else 0.0))
    return bool(np.all(dichotomy.signs * z >= -tol))


def trichotomy_lookup(trichotomies):
    """Map sign-vector bytes -> 1-based trichotomy index."""
    return {t.signs.tobytes(): t.index for t in trichotomies}


def classify_neuron(instance, trichotomies, u, alpha, rel_tol=1e-10):
    """The cone (trichotomy index, sign of alpha) containing the neuron.

    Returns None for an inactive neuron (``u = 0`` or ``alpha = 0``); raises
    NotEnumerated if the sign vector of ``Xu`` is missing from the supplied
    list, which signals an enumeration bug.
    """
    u = np.asarray(u, dtype=float)
    if np.linalg.norm(u) == 0.0 or alpha == 0.0:
        return None
    signs = snap_signs(instance.X @ u, rel_tol)
    idx = trichotomy_lookup(trichotomies).get(signs.tobytes())
    if idx is None:
        raise NotEnumerated(f"sign vector {signs.tolist()} not present in the enumeration")
    return idx, (1 if alpha > 0 else -1)
