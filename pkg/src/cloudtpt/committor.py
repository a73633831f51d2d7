"""Discrete committor: probability of hitting B before A on the chain.

The interior linear system is symmetrized by the stationary measure
m = pi |C| (exact under detailed balance) and solved by Jacobi
preconditioned conjugate gradients; small systems and stalled iterations
go through direct sparse elimination.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .generator import RateMatrix

__all__ = ["CommittorField", "solve_committor", "committor_residual"]

DIRECT_SOLVE_MAX_N = 2000


@dataclass(frozen=True)
class CommittorField:
    q: np.ndarray
    A_indices: np.ndarray
    B_indices: np.ndarray
    residual: float
    solver: str = "pcg"
    iterations: int = 0


def _check_sets(n: int, A: np.ndarray, B: np.ndarray):
    A = np.unique(np.asarray(A, dtype=int))
    B = np.unique(np.asarray(B, dtype=int))
    if len(A) == 0 or len(B) == 0:
        raise ValueError("A and B must be nonempty")
    if np.intersect1d(A, B).size:
        raise ValueError("A and B must be disjoint")
    for s, name in ((A, "A"), (B, "B")):
        if s.min() < 0 or s.max() >= n:
            raise ValueError(f"{name} contains out-of-range indices")
    return A, B


def _component_check(Q: RateMatrix, A: np.ndarray, B: np.ndarray):
    """Every connected component must touch A or B to pin its committor."""
    n = Q.n
    seen = np.zeros(n, dtype=bool)
    ab = np.zeros(n, dtype=bool)
    ab[A] = True
    ab[B] = True
    for s in range(n):
        if seen[s]:
            continue
        stack = [s]
        seen[s] = True
        members = [s]
        touches = ab[s]
        while stack:
            u = stack.pop()
            for v in Q.neighbors(u):
                if not seen[v]:
                    seen[v] = True
                    members.append(v)
                    stack.append(v)
                    touches = touches or ab[v]
        if not touches:
            raise ValueError(
                f"component of {len(members)} states touches neither A nor B "
                f"(members {sorted(members)[:10]}{'...' if len(members) > 10 else ''})")


def _pcg(L: sp.csr_matrix, b: np.ndarray, diag: np.ndarray, tol: float,
         max_iter: int):
    """Jacobi preconditioned conjugate gradients on the pinned system.

    Runs as plain CG on the symmetrically scaled matrix D^-1/2 L D^-1/2
    (unit diagonal, entries in [-1, 1]), which is the same iteration in
    exact arithmetic but keeps roundoff bounded when the weights span
    hundreds of orders of magnitude.  Converges on the row-scaled
    residual max_i |r_i| / L_ii <= tol of the unscaled system; the true
    residual is recomputed periodically to guard against recurrence drift.
    """
    s = 1.0 / np.sqrt(diag)
    Ls = sp.diags(s) @ L @ sp.diags(s)
    bs = s * b
    y = np.zeros_like(bs)
    r = bs.copy()
    p = r.copy()
    rr = r @ r
    best = np.inf
    stall = 0
    for it in range(max_iter):
        # |r_true_i| / L_ii = |r_scaled_i| / sqrt(L_ii)
        scaled = np.max(np.abs(r) / np.sqrt(diag))
        if scaled <= tol:
            r_true = bs - Ls @ y
            if np.max(np.abs(r_true) / np.sqrt(diag)) <= tol:
                return s * y, it, True
            r = r_true
            p = r.copy()
            rr = r @ r
            continue
        if scaled < best * (1.0 - 1e-4):
            best = scaled
            stall = 0
        else:
            stall += 1
            if stall > 200:
                return s * y, it, False
        Lp = Ls @ p
        alpha = rr / (p @ Lp)
        if not np.isfinite(alpha):
            return s * y, it, False
        y += alpha * p
        r -= alpha * Lp
        rr_new = r @ r
        p = r + (rr_new / rr) * p
        rr = rr_new
    return s * y, max_iter, np.max(np.abs(bs - Ls @ y) / np.sqrt(diag)) <= tol


def solve_committor(Q: RateMatrix, A, B, tol: float = 1e-10) -> CommittorField:
    """Solve sum_j Q_ij (q_j - q_i) = 0 with q = 0 on A and q = 1 on B."""
    A, B = _check_sets(Q.n, A, B)
    _component_check(Q, A, B)

    n = Q.n
    boundary = np.zeros(n, dtype=bool)
    boundary[A] = True
    boundary[B] = True
    interior = np.where(~boundary)[0]

    q = np.zeros(n)
    q[B] = 1.0
    if len(interior) == 0:
        return CommittorField(q, A, B, 0.0, "trivial", 0)

    # symmetrized operator L = diag(m) (lam - Q): SPD after pinning
    m = Q.m
    W = sp.csr_matrix(Q.rates.multiply(m[:, None]))   # W_ij = m_i Q_ij, symmetric
    diag_full = np.asarray(W.sum(axis=1)).ravel()
    Wii = W[interior][:, interior].tocsr()
    LI = sp.diags(diag_full[interior]) - Wii
    rhs = np.asarray(W[interior][:, B].sum(axis=1)).ravel()
    dI = diag_full[interior]

    def direct(seed=None):
        # symmetric Jacobi scaling keeps the factorization entries O(1)
        # even when the weights span hundreds of orders of magnitude
        s = 1.0 / np.sqrt(dI)
        Ls = sp.diags(s) @ LI @ sp.diags(s)
        return s * spla.spsolve(Ls.tocsc(), s * rhs)

    solver = "pcg"
    iterations = 0
    if len(interior) <= DIRECT_SOLVE_MAX_N:
        qi = direct()
        solver = "direct"
    else:
        qi, iterations, ok = _pcg(LI.tocsr(), rhs, dI, tol, max_iter=10 * n)
        if ok and (qi.min() < -1e-12 or qi.max() > 1.0 + 1e-12):
            ok = False
        if not ok:
            qi = direct()
            solver = "pcg+direct-fallback"

    q[interior] = qi
    if q.min() < -1e-12 or q.max() > 1.0 + 1e-12:
        raise ValueError(
            f"maximum principle violated: q in [{q.min():.3e}, {q.max():.3e}]")
    np.clip(q, 0.0, 1.0, out=q)
    q[A] = 0.0
    q[B] = 1.0

    field = CommittorField(q, A, B, 0.0, solver, iterations)
    res = committor_residual(Q, field)
    return CommittorField(q, A, B, res, solver, iterations)


def committor_residual(Q: RateMatrix, field: CommittorField) -> float:
    """max over interior states of |sum_j Q_ij (q_j - q_i)| / lam_i."""
    q = field.q
    if len(q) != Q.n:
        raise ValueError("committor length does not match the generator")
    r = np.abs(Q.apply(q)) / Q.lam
    r[field.A_indices] = 0.0
    r[field.B_indices] = 0.0
    return float(r.max())
