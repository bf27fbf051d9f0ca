"""Dense linear-programming feasibility oracle.

The enumeration code needs one primitive: given homogeneous rows, decide
whether a vector exists that keeps some rows strictly positive, some
non-negative and some exactly zero, and return a max-margin witness.  This
is solved as the LP

    maximize t
    s.t.     s . u >= t        for every strict row s
             c . u >= 0        for every closed row c
             e . u  = 0        for every equality row e
             -box <= u_i <= box,   t <= t_cap

via a two-phase dense tableau simplex with Bland's rule (guaranteed
termination).  Problems here are tiny (tens of rows), so a dense tableau is
the simplest exact choice.
"""

import numpy as np

from .errors import SolveFailed

#: strictness threshold: a pattern counts as realizable iff the optimal
#: margin exceeds this value (after global scaling of the data matrix).
T_MIN = 1e-9

_EPS = 1e-11


def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    for i in range(T.shape[0]):
        if i != row and T[i, col] != 0.0:
            T[i] -= T[i, col] * T[row]
    basis[row] = col


def _simplex(T, basis, allowed):
    """Run Bland-rule simplex on tableau ``T`` (last row: costs, last col: rhs).

    Returns "optimal" or "unbounded".  ``allowed`` is the number of columns
    eligible to enter the basis.
    """
    m = T.shape[0] - 1
    while True:
        ent = -1
        for j in range(allowed):
            if T[-1, j] < -_EPS:
                ent = j
                break
        if ent < 0:
            return "optimal"
        leave = -1
        best = np.inf
        for i in range(m):
            a = T[i, ent]
            if a > _EPS:
                r = T[i, -1] / a
                if r < best - 1e-13 or (abs(r - best) <= 1e-13 and (leave < 0 or basis[i] < basis[leave])):
                    best = r
                    leave = i
        if leave < 0:
            return "unbounded"
        _pivot(T, basis, leave, ent)


def solve_lp(c, A_ub, b_ub, A_eq=None, b_eq=None):
    """Minimize ``c . x`` over free variables with ``A_ub x <= b_ub`` and
    ``A_eq x = b_eq``.

    Returns ``(status, x, value)`` where status is one of "optimal",
    "unbounded", "infeasible".
    """
    c = np.asarray(c, dtype=float)
    A_ub = np.asarray(A_ub, dtype=float).reshape(-1, c.size)
    b_ub = np.asarray(b_ub, dtype=float).reshape(-1)
    if A_eq is None:
        A_eq = np.zeros((0, c.size))
        b_eq = np.zeros(0)
    else:
        A_eq = np.asarray(A_eq, dtype=float).reshape(-1, c.size)
        b_eq = np.asarray(b_eq, dtype=float).reshape(-1)

    nv = c.size
    mu, me = A_ub.shape[0], A_eq.shape[0]
    m = mu + me
    # standard form: x = xp - xn, slacks on inequality rows, artificial basis
    A = np.zeros((m, 2 * nv + mu))
    A[:mu, :nv] = A_ub
    A[:mu, nv:2 * nv] = -A_ub
    A[mu:, :nv] = A_eq
    A[mu:, nv:2 * nv] = -A_eq
    A[:mu, 2 * nv:] = np.eye(mu)
    b = np.concatenate([b_ub, b_eq])
    neg = b < 0
    A[neg] *= -1.0
    b = np.abs(b)

    ncols = A.shape[1]
    total = ncols + m  # + artificials
    T = np.zeros((m + 1, total + 1))
    T[:m, :ncols] = A
    T[:m, ncols:total] = np.eye(m)
    T[:m, -1] = b
    basis = [ncols + i for i in range(m)]
    # phase 1 objective: sum of artificials
    T[-1, :ncols] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    status = _simplex(T, basis, ncols)
    if status != "optimal" or T[-1, -1] < -1e-8 * (1.0 + np.abs(b).sum()):
        return "infeasible", None, None
    # drive remaining artificials out of the basis
    keep = np.ones(m, dtype=bool)
    for i in range(m):
        if basis[i] >= ncols:
            piv = -1
            for j in range(ncols):
                if abs(T[i, j]) > 1e-9:
                    piv = j
                    break
            if piv >= 0:
                _pivot(T, basis, i, piv)
            else:
                keep[i] = False  # redundant row
    rows = list(np.nonzero(keep)[0])
    T2 = np.zeros((len(rows) + 1, ncols + 1))
    T2[:-1, :ncols] = T[rows][:, :ncols]
    T2[:-1, -1] = T[rows][:, -1]
    basis2 = [basis[i] for i in rows]
    # phase 2 costs, reduced against the current basis
    cost = np.concatenate([c, -c, np.zeros(mu)])
    T2[-1, :ncols] = cost
    for i, bi in enumerate(basis2):
        if cost[bi] != 0.0:
            T2[-1] -= cost[bi] * T2[i]
    status = _simplex(T2, basis2, ncols)
    x = np.zeros(ncols)
    for i, bi in enumerate(basis2):
        x[bi] = T2[i, -1]
    sol = x[:nv] - x[nv:2 * nv]
    if status == "unbounded":
        return "unbounded", sol, None
    return "optimal", sol, float(cost @ x)


def max_margin(strict, closed=None, equal=None, d=None, box=1.0, t_cap=1.0):
    """Maximize the margin ``t`` of the strict rows (see module docstring).

    Returns ``(t_star, u)``.  The problem is always feasible (``u = 0`` with
    ``t <= 0``), so ``t_star`` is well defined; it is capped at ``t_cap``.
    """
    strict = np.zeros((0, d)) if strict is None or len(strict) == 0 else np.atleast_2d(np.asarray(strict, dtype=float))
    closed = np.zeros((0, strict.shape[1] if d is None else d)) if closed is None or len(closed) == 0 else np.atleast_2d(np.asarray(closed, dtype=float))
    equal = np.zeros((0, strict.shape[1] if d is None else d)) if equal is None or len(equal) == 0 else np.atleast_2d(np.asarray(equal, dtype=float))
    if d is None:
        d = max(strict.shape[1], closed.shape[1], equal.shape[1])

    ms, mc = strict.shape[0], closed.shape[0]
    rows = []
    rhs = []
    for s in strict:          # -s.u + t <= 0
        rows.append(np.concatenate([-s, [1.0]]))
        rhs.append(0.0)
    for cr in closed:         # -c.u <= 0
        rows.append(np.concatenate([-cr, [0.0]]))
        rhs.append(0.0)
    for i in range(d):        # box
        e = np.zeros(d + 1)
        e[i] = 1.0
        rows.append(e.copy())
        rhs.append(box)
        e[i] = -1.0
        rows.append(e)
        rhs.append(box)
    e = np.zeros(d + 1)
    e[-1] = 1.0
    rows.append(e)            # t <= t_cap
    rhs.append(t_cap)

    A_eq = None
    b_eq = None
    if equal.shape[0]:
        A_eq = np.hstack([equal, np.zeros((equal.shape[0], 1))])
        b_eq = np.zeros(equal.shape[0])

    obj = np.zeros(d + 1)
    obj[-1] = -1.0
    status, x, val = solve_lp(obj, np.array(rows), np.array(rhs), A_eq, b_eq)
    if status == "infeasible":
        # equality rows can make the homogeneous system infeasible only
        # through numerical trouble; u = 0 always satisfies everything
        raise SolveFailed("margin LP reported infeasible on a homogeneous system")
    return -val, x[:d]
