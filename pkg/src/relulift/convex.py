"""Cone-constrained group-lasso programs and their splitting solver.

The lifted training problem is

    minimize  loss( sum_b gains_b * (X w_b) ) + beta * sum_b ||w_b||_2
    s.t.      each block w_b lies in its polyhedral activation cone,

with one block per signed activation pattern.  Two variants share this
structure: the binary-pattern program (2p blocks, inequality cones) and the
sign-partition program (2q blocks, cones with equality rows); the latter
can be restricted to any subset of partitions.

The solver is a three-operator splitting scheme: a gradient step on the
smooth data-fitting term, a group soft-threshold for the norm penalty and a
Dykstra cone projection, with over-relaxation and residual-balancing step
adaptation.  Every inner operation is exact and cheap, so no external
solver is needed.
"""

import zlib
from dataclasses import dataclass

import numpy as np

from .errors import InfeasiblePoint, ProjectionStalled
from .validation import readonly

DEFAULT_MAX_ITER = 200_000
_OVER_RELAX = 1.5
_BLOCK_ZERO_REL = 1e-8  # ||w_b|| below this (times scale) counts as a zero block


# ---------------------------------------------------------------------------
# value objects


@dataclass(frozen=True)
class ConvexPoint:
    """Stacked blocks (2p x d) of the binary-pattern program."""

    blocks: np.ndarray
    arrangement_key: int

    def __post_init__(self):
        object.__setattr__(self, "blocks", readonly(np.atleast_2d(np.asarray(self.blocks, dtype=float))))

    @property
    def n_blocks(self):
        return self.blocks.shape[0]

    def nonzero_count(self):
        return count_nonzero_blocks(self.blocks)


@dataclass(frozen=True)
class TriConvexPoint:
    """Stacked blocks (2q x d) of the sign-partition program."""

    blocks: np.ndarray
    arrangement_key: int

    def __post_init__(self):
        object.__setattr__(self, "blocks", readonly(np.atleast_2d(np.asarray(self.blocks, dtype=float))))

    @property
    def n_blocks(self):
        return self.blocks.shape[0]


@dataclass(frozen=True)
class SolveReport:
    point: object
    objective: float
    primal_residual: float
    dual_residual: float
    iterations: int
    converged: bool

    def to_dict(self):
        return {
            "schema": 1,
            "objective": self.objective,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "blocks": [{"index": i + 1, "w": list(map(float, w))}
                       for i, w in enumerate(self.point.blocks)],
        }


def dichotomy_key(dichotomies):
    """Deterministic fingerprint of an enumerated pattern list."""
    return zlib.crc32(b"".join(d.pattern.tobytes() for d in dichotomies))


def trichotomy_key(trichotomies):
    return zlib.crc32(b"".join(t.signs.tobytes() for t in trichotomies))


def count_nonzero_blocks(blocks, rel_tol=_BLOCK_ZERO_REL):
    blocks = np.atleast_2d(blocks)
    scale = 1.0 + (float(np.max(np.abs(blocks))) if blocks.size else 0.0)
    return int(np.sum(np.linalg.norm(blocks, axis=1) > rel_tol * scale))


# ---------------------------------------------------------------------------
# proximal pieces


def group_soft_threshold(w, tau):
    """Prox of ``tau * ||.||_2``: shrink ``w`` toward 0 by ``tau`` in norm."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    w = np.asarray(w, dtype=float)
    nrm = float(np.linalg.norm(w))
    if nrm <= tau:
        return np.zeros_like(w)
    return (1.0 - tau / nrm) * w


def _group_soft_threshold_rows(W, tau):
    nrm = np.linalg.norm(W, axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(nrm > tau, 1.0 - tau / nrm, 0.0)
    return factor * W


def project_cone(halfspaces, v, tol=1e-10, equalities=None, max_cycles=20_000):
    """Euclidean projection of ``v`` onto the polyhedral cone

        {x : h . x >= 0 for all halfspace rows h,  e . x = 0 for all rows e}

    by Dykstra's alternating projections with per-constraint corrections.
    The cone always contains 0, so the projection exists; raises
    ProjectionStalled if the violation plateaus above tolerance.
    """
    v = np.asarray(v, dtype=float)
    H = np.atleast_2d(np.asarray(halfspaces, dtype=float)) if halfspaces is not None and len(halfspaces) else np.zeros((0, v.size))
    E = np.atleast_2d(np.asarray(equalities, dtype=float)) if equalities is not None and len(equalities) else np.zeros((0, v.size))
    rows = [(h, False) for h in H if np.linalg.norm(h) > 0] + [(e, True) for e in E if np.linalg.norm(e) > 0]
    if not rows:
        return v.copy()
    x = v.copy()
    corr = [np.zeros_like(v) for _ in rows]
    scale = 1.0 + float(np.linalg.norm(v))
    best = np.inf
    stagnant = 0
    for cycle in range(max_cycles):
        shift = 0.0
        for i, (a, is_eq) in enumerate(rows):
            y = x + corr[i]
            t = float(a @ y) / float(a @ a)
            if is_eq:
                xn = y - t * a
            elif t < 0.0:
                xn = y - t * a
            else:
                xn = y
            corr[i] = y - xn
            shift = max(shift, float(np.max(np.abs(xn - x))) if xn is not x else 0.0)
            x = xn
        viol = 0.0
        for a, is_eq in rows:
            t = float(a @ x) / np.linalg.norm(a)
            viol = max(viol, abs(t) if is_eq else max(-t, 0.0))
        if viol <= tol * scale and shift <= tol * scale:
            return x
        if viol >= best - 1e-16 * scale:
            stagnant += 1
            if stagnant > 200:
                raise ProjectionStalled(
                    f"violation plateaued at {viol:.3e} after {cycle + 1} cycles")
        else:
            best = viol
            stagnant = 0
    raise ProjectionStalled(f"no convergence within {max_cycles} cycles")


# ---------------------------------------------------------------------------
# block program description


class _BlockProgram:
    """Shared geometry of the lifted programs.

    gains      (n, B): prediction is ``sum_b gains[:, b] * (X w_b)``
    con_signs  (n, B): +-1 inequality orientation where ``ineq_mask`` is set
    eq_mask    (n, B): rows pinned to ``x_k . w_b = 0``
    """

    def __init__(self, X, gains, con_signs, ineq_mask, eq_mask, key):
        self.X = X
        self.gains = gains
        self.con_signs = con_signs
        self.ineq_mask = ineq_mask
        self.eq_mask = eq_mask
        self.key = key
        self.n, self.d = X.shape
        self.B = gains.shape[1]
        self.row_sq = np.einsum("nd,nd->n", X, X)
        self.active_rows = [k for k in range(self.n)
                            if self.row_sq[k] > 0 and (ineq_mask[k].any() or eq_mask[k].any())]

    def predict(self, W):
        if self.B == 0:
            return np.zeros(self.n)
        return np.einsum("nb,nb->n", self.X @ W.T, self.gains)

    def grad_blocks(self, g):
        return (self.gains * g[:, None]).T @ self.X

    def penalty(self, W):
        return float(np.sum(np.linalg.norm(W, axis=1)))

    def violation(self, W):
        """Worst constraint violation, scale-normalized."""
        if self.B == 0:
            return 0.0
        Z = self.X @ W.T  # (n, B)
        scale = 1.0 + float(np.max(np.abs(Z)))
        vi = np.where(self.ineq_mask, np.maximum(-self.con_signs * Z, 0.0), 0.0)
        ve = np.where(self.eq_mask, np.abs(Z), 0.0)
        return float(max(vi.max(initial=0.0), ve.max(initial=0.0))) / scale

    def project(self, V, corr=None, cycles=40, tol=1e-13):
        """Batched Dykstra projection of every block onto its cone."""
        W = V.copy()
        if corr is None:
            corr = np.zeros((self.n, self.B, self.d))
        for _ in range(cycles):
            shift = 0.0
            for k in self.active_rows:
                x = self.X[k]
                y = W + corr[k]
                t = (y @ x) / self.row_sq[k]  # (B,)
                coef = np.where(self.eq_mask[k], t,
                                np.where(self.ineq_mask[k],
                                         np.minimum(self.con_signs[k] * t, 0.0) * self.con_signs[k],
                                         0.0))
                Wn = y - coef[:, None] * x[None, :]
                corr[k] = y - Wn
                shift = max(shift, float(np.max(np.abs(Wn - W))))
                W = Wn
            if self.violation(W) <= tol and shift <= tol * (1.0 + float(np.max(np.abs(W)))):
                break
        return W, corr


def _dichotomy_program(instance, dichotomies):
    n, d = instance.n, instance.d
    B = len(dichotomies)
    gains = np.zeros((n, B))
    signs = np.zeros((n, B))
    ineq = np.zeros((n, B), dtype=bool)
    nonzero_row = np.linalg.norm(instance.X, axis=1) > 0
    for b, dic in enumerate(dichotomies):
        pat = dic.pattern.astype(float)
        gains[:, b] = pat if dic.positive else -pat
        signs[:, b] = 2.0 * pat - 1.0
        ineq[:, b] = nonzero_row
    return _BlockProgram(instance.X, gains, signs, ineq, np.zeros((n, B), dtype=bool),
                         dichotomy_key(dichotomies))


def _trichotomy_program(instance, trichotomies, subset=None):
    """Program over blocks (w_j, w_{j+q}); ``subset`` holds 1-based
    partition indices (None = all).  Blocks outside the subset are frozen
    at zero by masking their gains and constraints and pinning them in the
    solver."""
    n, d = instance.n, instance.d
    q = len(trichotomies)
    B = 2 * q
    live = np.zeros(q, dtype=bool)
    if subset is None:
        live[:] = True
    else:
        for j in subset:
            if not 1 <= int(j) <= q:
                raise IndexError(f"trichotomy index {j} out of range [1, {q}]")
            live[int(j) - 1] = True
    gains = np.zeros((n, B))
    signs = np.zeros((n, B))
    ineq = np.zeros((n, B), dtype=bool)
    eq = np.zeros((n, B), dtype=bool)
    nonzero_row = np.linalg.norm(instance.X, axis=1) > 0
    for j, tri in enumerate(trichotomies):
        if not live[j]:
            continue
        s = tri.signs.astype(float)
        pos = (s > 0).astype(float)
        for b, gain_sign in ((j, 1.0), (j + q, -1.0)):
            gains[:, b] = gain_sign * pos
            signs[:, b] = s
            ineq[:, b] = (tri.signs != 0) & nonzero_row
            eq[:, b] = (tri.signs == 0) & nonzero_row
    prog = _BlockProgram(instance.X, gains, signs, ineq, eq, trichotomy_key(trichotomies))
    prog.frozen = np.concatenate([~live, ~live])
    return prog


# ---------------------------------------------------------------------------
# objectives


def _check_feasible(program, W, feas_tol):
    viol = program.violation(W)
    if viol > feas_tol:
        raise InfeasiblePoint(f"cone violation {viol:.3e} exceeds tolerance {feas_tol:.1e}")


def objective_c(instance, dichotomies, point, feas_tol=1e-7):
    """Objective of the binary-pattern program at a feasible point."""
    prog = _dichotomy_program(instance, dichotomies)
    W = np.atleast_2d(np.asarray(point.blocks if isinstance(point, ConvexPoint) else point, dtype=float))
    _check_feasible(prog, W, feas_tol)
    loss = instance.loss_fn()
    return loss.value(prog.predict(W)) + instance.beta * prog.penalty(W)


def objective_tri(instance, trichotomies, point, feas_tol=1e-7):
    """Objective of the sign-partition program at a feasible point."""
    prog = _trichotomy_program(instance, trichotomies, None)
    W = np.atleast_2d(np.asarray(point.blocks if isinstance(point, TriConvexPoint) else point, dtype=float))
    _check_feasible(prog, W, feas_tol)
    loss = instance.loss_fn()
    return loss.value(prog.predict(W)) + instance.beta * prog.penalty(W)


# ---------------------------------------------------------------------------
# solver

from scipy.optimize import nnls  # noqa: E402  (solver-local dep)


def _program_kkt_gap(instance, program, W, tilt=None, bail_above=None, with_worst=False):
    """Worst-block first-order optimality residual of a feasible point.

    Nonzero blocks need duals (nonnegative on active inequality rows, free
    on equality rows) cancelling the gradient plus norm subgradient; zero
    blocks need the best dual fit within the penalty level.  Small per-
    block least-squares fits; used to accept or reject polished iterates.
    When ``bail_above`` is set the scan stops at the first block whose
    residual exceeds it (the result is then only a lower bound).  With
    ``with_worst`` the offending block index and its residual vector are
    returned too (the residual vector of a zero block points along the
    infeasible dual direction, i.e. minus a useful entering direction).
    """
    loss = instance.loss_fn()
    beta = instance.beta
    g = loss.grad(program.predict(W))
    grads = program.grad_blocks(g)
    if tilt is not None:
        grads = grads + tilt
    scaleW = 1.0 + (float(np.max(np.abs(W))) if W.size else 0.0)
    gap = 0.0
    worst = (-1, None)
    for b in range(program.B):
        if getattr(program, "frozen", None) is not None and program.frozen[b]:
            continue
        w = W[b]
        z = program.X @ w
        nonzero = np.linalg.norm(w) > _BLOCK_ZERO_REL * scaleW
        act_cut = 1e-8 * (1.0 + float(np.max(np.abs(z))))
        if nonzero:
            ineq_act = program.ineq_mask[:, b] & (np.abs(z) <= act_cut)
            target = grads[b] + beta * w / np.linalg.norm(w)
        else:
            ineq_act = program.ineq_mask[:, b]
            target = grads[b]
        eq_rows = np.nonzero(program.eq_mask[:, b])[0]
        ineq_rows = np.nonzero(ineq_act)[0]
        A = (program.con_signs[ineq_rows, b][:, None] * program.X[ineq_rows]).T
        if eq_rows.size:
            # free duals on equality rows: project them out analytically
            E = program.X[eq_rows].T
            U, S, _ = np.linalg.svd(E, full_matrices=False)
            rank = int(np.sum(S > 1e-12 * (S[0] if S.size else 1.0)))
            Q = U[:, :rank]
            target = target - Q @ (Q.T @ target)
            if A.size:
                A = A - Q @ (Q.T @ A)
        if A.size:
            zeta, rnorm = nnls(A, target)
            rvec = target - A @ zeta
        else:
            rnorm = float(np.linalg.norm(target))
            rvec = target
        block_gap = rnorm if nonzero else max(rnorm - beta, 0.0)
        if block_gap > gap:
            gap = block_gap
            worst = (b, rvec)
        if bail_above is not None and gap > bail_above:
            break
    if with_worst:
        return gap, worst[0], worst[1]
    return gap


def _polish(instance, program, W_start, tilt=None, accept_gap=1e-11):
    """Active-set Newton refinement on the identified support.

    Tries a support ladder (large blocks first, then every nonzero block);
    blocks that collapse during Newton are dropped and the fit is retried.
    A candidate is accepted only when feasible and when the independently
    measured first-order gap clears ``accept_gap``; returns ``(W, gap)``
    for the best candidate or None when nothing verifiable came out.
    """
    scaleW = 1.0 + float(np.max(np.abs(W_start)))
    norms = np.linalg.norm(W_start, axis=1)
    order = [b for b in np.argsort(-norms) if norms[b] > 1e-8 * scaleW]
    best = None
    tried = set()

    def attempt(start_point, support):
        nonlocal best
        support = sorted(int(b) for b in support)
        for _retry in range(8):
            key = tuple(support)
            if key in tried:
                return None
            tried.add(key)
            out = _newton_on_support(instance, program, start_point, support, tilt)
            if isinstance(out, list):
                support = [b for b in support if b not in out]
                continue
            break
        if not isinstance(out, np.ndarray) or program.violation(out) > 1e-10:
            return None
        gap, wb, rvec = _program_kkt_gap(instance, program, out, tilt=tilt,
                                         bail_above=accept_gap, with_worst=True)
        if best is None or gap < best[1]:
            best = (out, gap)
        return out, gap, wb, rvec

    # support ladder: largest blocks first, growing one block at a time
    for k in range(1, min(len(order), program.n + 6) + 1):
        res = attempt(W_start, order[:k])
        if res is None:
            continue
        out, gap, wb, rvec = res
        if gap <= accept_gap:
            return best
        # active-set augmentation: the violated zero block enters the
        # support, seeded along its infeasible dual direction
        for _round in range(program.n + 4):
            current = [b for b in range(program.B)
                       if np.linalg.norm(out[b]) > _BLOCK_ZERO_REL * scaleW]
            if wb < 0 or wb in current or rvec is None:
                break
            seed_dir = _cone_project_single(program, wb, -rvec)
            nrm = float(np.linalg.norm(seed_dir))
            if nrm <= 1e-12:
                break
            start = out.copy()
            start[wb] = seed_dir * (0.01 * scaleW / nrm)
            res = attempt(start, current + [wb])
            if res is None:
                break
            out, gap, wb, rvec = res
            if gap <= accept_gap:
                return best
    return best


def _cone_project_single(program, b, v):
    """Euclidean projection of ``v`` onto block ``b``'s cone."""
    ineq_rows = np.nonzero(program.ineq_mask[:, b])[0]
    eq_rows = np.nonzero(program.eq_mask[:, b])[0]
    H = program.con_signs[ineq_rows, b][:, None] * program.X[ineq_rows]
    E = program.X[eq_rows]
    try:
        return project_cone(H, v, tol=1e-12, equalities=E, max_cycles=2000)
    except ProjectionStalled:
        return np.zeros_like(v)


def _newton_on_support(instance, program, W_start, support, tilt=None,
                       max_rounds=5, newton_iters=60):
    """Equality-constrained Newton on the given support blocks.

    Pins the (nearly) active constraint rows, iterates Newton steps with a
    line search, and re-pins rows that go infeasible.  Returns the refined
    full-size point, the index of a support block that collapsed to zero
    (caller drops it and retries), or None on failure.
    """
    loss = instance.loss_fn()
    beta = instance.beta
    scaleW = 1.0 + float(np.max(np.abs(W_start)))
    if not support:
        return np.zeros_like(W_start)
    d = program.d
    k = len(support) * d
    X = program.X

    def pack(W):
        return np.concatenate([W[b] for b in support])

    def unpack(x):
        W = np.zeros_like(W_start)
        for i, b in enumerate(support):
            W[b] = x[i * d:(i + 1) * d]
        return W

    # design matrix of the prediction restricted to the support
    A = np.zeros((program.n, k))
    for i, b in enumerate(support):
        A[:, i * d:(i + 1) * d] = program.gains[:, b][:, None] * X

    active = set()
    for i, b in enumerate(support):
        z = X @ W_start[b]
        cut = 1e-6 * (1.0 + float(np.max(np.abs(z))))
        for r in np.nonzero(program.eq_mask[:, b])[0]:
            active.add((i, int(r)))
        for r in np.nonzero(program.ineq_mask[:, b] & (np.abs(z) <= cut))[0]:
            active.add((i, int(r)))

    x = pack(W_start)

    def objective(xv):
        val = loss.value(A @ xv)
        for i in range(len(support)):
            val += beta * float(np.linalg.norm(xv[i * d:(i + 1) * d]))
        if tilt is not None:
            val += float(np.sum(tilt * unpack(xv)))
        return val

    for _round in range(max_rounds):
        C = np.zeros((len(active), k))
        for j, (i, r) in enumerate(sorted(active)):
            C[j, i * d:(i + 1) * d] = X[r]
        # restore exact feasibility on the pinned rows
        if C.shape[0]:
            x = x - C.T @ np.linalg.lstsq(C @ C.T, C @ x, rcond=None)[0]
        for _ in range(newton_iters):
            yhat = A @ x
            gvec = loss.grad(yhat)
            grad = A.T @ gvec
            H = (A * loss.hess_diag(yhat)[:, None]).T @ A
            collapsed = [support[i] for i in range(len(support))
                         if np.linalg.norm(x[i * d:(i + 1) * d]) < 1e-5 * scaleW]
            if collapsed:
                return collapsed  # drop these blocks and retry
            for i in range(len(support)):
                w = x[i * d:(i + 1) * d]
                nrm = float(np.linalg.norm(w))
                grad[i * d:(i + 1) * d] += beta * w / nrm
                P = np.eye(d) / nrm - np.outer(w, w) / nrm**3
                H[i * d:(i + 1) * d, i * d:(i + 1) * d] += beta * P
            if tilt is not None:
                grad += np.concatenate([tilt[b] for b in support])
            c = C.shape[0]
            KKT = np.zeros((k + c, k + c))
            KKT[:k, :k] = H + 1e-12 * np.eye(k)
            if c:
                KKT[:k, k:] = C.T
                KKT[k:, :k] = C
            rhs = np.concatenate([-grad, np.zeros(c)])
            try:
                sol = np.linalg.solve(KKT, rhs)
            except np.linalg.LinAlgError:
                sol, *_ = np.linalg.lstsq(KKT, rhs, rcond=None)
            dx = sol[:k]
            # projected gradient norm decides convergence
            pg = grad if not c else grad - C.T @ np.linalg.lstsq(
                C @ C.T, C @ grad, rcond=None)[0]
            if float(np.linalg.norm(pg)) <= 1e-13 * (1.0 + float(np.linalg.norm(grad))):
                break
            f0 = objective(x)
            slope = float(pg @ dx)
            alpha = 1.0
            accepted = False
            for _ls in range(40):
                xn = x + alpha * dx
                if objective(xn) <= f0 + min(1e-4 * alpha * slope, 0.0) + 1e-15 * (1.0 + abs(f0)):
                    x = xn
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                break
        # re-examine inactive rows; pin any that went (numerically) negative
        W = unpack(x)
        new_active = set(active)
        feasible = True
        for i, b in enumerate(support):
            z = X @ W[b]
            margins = program.con_signs[:, b] * z
            for r in np.nonzero(program.ineq_mask[:, b])[0]:
                if (i, int(r)) in active:
                    continue
                if margins[r] < -1e-12 * (1.0 + float(np.max(np.abs(z)))):
                    new_active.add((i, int(r)))
                    feasible = False
        if feasible:
            return unpack(x)
        active = new_active
    return None


def _opnorm_sq(program, iters=80):
    """Power-iteration estimate of the squared operator norm of the stacked
    prediction map."""
    if program.B == 0:
        return 0.0
    v = np.ones(program.n) / np.sqrt(program.n)
    lam = 0.0
    for _ in range(iters):
        T = program.grad_blocks(v)
        w = program.predict(T)
        nrm = float(np.linalg.norm(w))
        if nrm <= 1e-300:
            return 0.0
        lam = nrm
        v = w / nrm
    return lam


def _solve(instance, program, tol=None, max_iter=DEFAULT_MAX_ITER, tilt=None, warm=None):
    """Splitting iterations plus verified Newton polish on a block program.

    The splitting loop (gradient step, group soft-threshold, cone
    projection, over-relaxation 1.5, residual-balancing step adaptation)
    identifies the active structure; once its residuals are moderate, an
    active-set Newton polish refines the point and is accepted only if the
    independently measured first-order gap clears the tolerance.  Returns
    ``(W, objective, primal, dual, iterations, converged, state)``;
    ``state`` can be passed back via ``warm`` to re-solve a tilted variant.
    """
    loss = instance.loss_fn()
    beta = instance.beta
    B, d = program.B, program.d
    if B == 0:
        obj = loss.value(np.zeros(program.n))
        return np.zeros((0, d)), obj, 0.0, 0.0, 0, True, None
    frozen = getattr(program, "frozen", None)
    tol = float(tol) if tol is not None else 1e-6 * np.sqrt(B * d)

    lip = loss.lipschitz() * _opnorm_sq(program) + 1e-12
    gamma = 0.9 / lip
    gamma_lo, gamma_hi = 0.02 / lip, 0.99 / lip
    if warm is not None:
        z = warm["z"].copy()
        corr = warm["corr"].copy()
        gamma = float(np.clip(warm["gamma"], gamma_lo, gamma_hi))
    else:
        z = np.zeros((B, d))
        corr = np.zeros((program.n, B, d))

    def finish(W, r, s, it, converged):
        if frozen is not None:
            W[frozen] = 0.0
        scale = 1.0 + (float(np.max(np.abs(W))) if W.size else 0.0)
        W[np.linalg.norm(W, axis=1) <= _BLOCK_ZERO_REL * scale] = 0.0
        obj = loss.value(program.predict(W)) + beta * program.penalty(W)
        if tilt is not None:
            obj += float(np.sum(tilt * W))
        state = {"z": z, "corr": corr, "gamma": gamma}
        return W, obj, r, s, it, converged, state

    accept_gap = min(tol, 1e-10 * (1.0 + loss.lipschitz() + beta))
    identify_tol = max(10.0 * tol, 1e-3)
    W0 = getattr(program, "start", None)
    if warm is None and W0 is not None:
        polished = _polish(instance, program, W0, tilt=tilt, accept_gap=accept_gap)
        if polished is not None and polished[1] <= accept_gap:
            W, gap = polished
            return finish(W.copy(), gap, gap, 0, True)
        nrm0 = np.linalg.norm(W0, axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(nrm0 > 0, W0 * (1.0 + gamma * beta / nrm0), 0.0)
    Wg_prev = None
    Wh = _group_soft_threshold_rows(z, gamma * beta)
    r = s = np.inf
    it = 0
    next_polish = 50
    while it < max_iter:
        it += 1
        Wg = _group_soft_threshold_rows(z, gamma * beta)
        if frozen is not None:
            Wg[frozen] = 0.0
        g = loss.grad(program.predict(Wg))
        grads = program.grad_blocks(g)
        if tilt is not None:
            grads = grads + tilt
        V = 2.0 * Wg - z - gamma * grads
        cycles = 3 if r > 1000.0 * tol else (10 if r > 50.0 * tol else 30)
        Wh, corr = program.project(V, corr, cycles=cycles, tol=max(tol * 1e-4, 1e-14))
        if frozen is not None:
            Wh[frozen] = 0.0
        step = Wh - Wg
        z = z + _OVER_RELAX * step
        r = float(np.linalg.norm(step))
        if Wg_prev is not None:
            s = float(np.linalg.norm(Wg - Wg_prev)) / gamma
        Wg_prev = Wg
        if r <= identify_tol and it >= next_polish:
            next_polish = it + max(100, it // 4)
            polished = _polish(instance, program, Wg, tilt=tilt, accept_gap=accept_gap)
            if polished is not None and polished[1] <= accept_gap:
                W, gap = polished
                return finish(W.copy(), gap, gap, it, True)
        if r <= tol and s <= tol:
            W, corr = program.project(Wh, corr, cycles=4000, tol=1e-14)
            polished = _polish(instance, program, W, tilt=tilt, accept_gap=accept_gap)
            if polished is not None and polished[1] <= accept_gap:
                Wp, gap = polished
                return finish(Wp.copy(), gap, gap, it, True)
            return finish(W, r, s, it, True)
        if it % 100 == 0 and np.isfinite(s):
            if r > 10.0 * s and gamma > gamma_lo:
                new_gamma = max(gamma / 1.6, gamma_lo)
            elif s > 10.0 * r and gamma < gamma_hi:
                new_gamma = min(gamma * 1.6, gamma_hi)
            else:
                new_gamma = gamma
            if new_gamma != gamma:
                z = Wg + (z - Wg) * (new_gamma / gamma)
                gamma = new_gamma

    W, corr = program.project(Wh, corr, cycles=4000, tol=1e-14)
    return finish(W, r, s, it, False)


def solve_dichotomy_program(instance, dichotomies, tol=None, max_iter=DEFAULT_MAX_ITER):
    """Solve the binary-pattern program; deterministic given its inputs.

    On iteration exhaustion the best iterate is returned with
    ``converged=False`` rather than raising.
    """
    prog = _dichotomy_program(instance, dichotomies)
    W, obj, r, s, it, ok, _ = _solve(instance, prog, tol=tol, max_iter=max_iter)
    return SolveReport(point=ConvexPoint(W, prog.key), objective=obj,
                       primal_residual=r, dual_residual=s, iterations=it, converged=ok)


def solve_trichotomy_program(instance, trichotomies, subset=None, tol=None,
                             max_iter=DEFAULT_MAX_ITER):
    """Solve the sign-partition program, optionally restricted to a subset
    of 1-based partition indices (None means all).

    The unrestricted program shares its optimal value with the (smaller)
    binary-pattern program, so that one is solved first and its solution,
    re-expressed per sign partition, seeds this solve; the splitting loop
    then only has to close whatever gap the seed leaves.
    """
    prog = _trichotomy_program(instance, trichotomies, subset)
    if subset is None:
        prog.start = _seed_from_patterns(instance, trichotomies, tol, max_iter)
    W, obj, r, s, it, ok, _ = _solve(instance, prog, tol=tol, max_iter=max_iter)
    return SolveReport(point=TriConvexPoint(W, prog.key), objective=obj,
                       primal_residual=r, dual_residual=s, iterations=it, converged=ok)


def _seed_from_patterns(instance, trichotomies, tol, max_iter):
    """Solve the binary-pattern program and place each nonzero block into
    the partition block matching its exact sign vector."""
    from .arrangement import Dichotomy, snap_signs

    patterns = {}
    for t in trichotomies:
        pat = (t.signs >= 0).astype(np.uint8)
        patterns.setdefault(pat.tobytes(), (pat, t.witness))
    ordered = sorted(patterns.values(), key=lambda pw: tuple(int(b) for b in pw[0]))
    p = len(ordered)
    dics = [Dichotomy(index=i + 1, pattern=pat, positive=True, witness=wit)
            for i, (pat, wit) in enumerate(ordered)]
    dics += [Dichotomy(index=p + i + 1, pattern=pat, positive=False, witness=wit)
             for i, (pat, wit) in enumerate(ordered)]
    dprog = _dichotomy_program(instance, dics)
    Wd, *_rest = _solve(instance, dprog, tol=tol, max_iter=max_iter)
    q = len(trichotomies)
    lookup = {t.signs.tobytes(): t.index - 1 for t in trichotomies}
    W0 = np.zeros((2 * q, instance.d))
    for b in range(2 * p):
        w = Wd[b]
        if np.linalg.norm(w) == 0.0:
            continue
        j = lookup.get(snap_signs(instance.X @ w).tobytes())
        if j is None:
            return None
        W0[j if b < p else j + q] += w
    return W0


def random_feasible_point(instance, dichotomies, rng, scale=1.0):
    """A random feasible point: gaussian blocks projected onto their cones.

    Useful as test fodder; sparsified a little so typical points have a mix
    of zero and nonzero blocks.
    """
    prog = _dichotomy_program(instance, dichotomies)
    V = rng.standard_normal((prog.B, prog.d)) * scale
    V[rng.random(prog.B) < 0.5] = 0.0
    W, _ = prog.project(V, None, cycles=4000, tol=1e-14)
    return ConvexPoint(W, prog.key)
