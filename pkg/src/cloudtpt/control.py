"""Optimally controlled chain conditioned to reach B before A.

The committor tilts the generator, Qq_ij = (q_j / q_i) Q_ij on the states
with A removed; the tilted chain keeps detailed balance with respect to
the effective measure q^2 pi |C| and leaves A through the reactive exit
distribution over the faces of A.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .committor import CommittorField
from .generator import RateMatrix

__all__ = ["ControlledChain", "build_controlled_chain",
           "effective_potential_field", "discrete_control_field"]

Q_FLOOR = 1e-300


@dataclass(frozen=True)
class ControlledChain:
    """Doob-transformed jump process on the states outside A."""

    states: np.ndarray           # retained original indices (A removed)
    rates: sp.csr_matrix         # controlled off-diagonal rates, retained indexing
    lam: np.ndarray              # controlled jump rates per retained state
    P: sp.csr_matrix             # controlled transition probabilities
    pi_eff: np.ndarray           # q^2 pi on retained states
    u_eff: np.ndarray            # effective potential relative to the weight shift
    exit_states: np.ndarray      # original indices reachable in one jump from A
    exit_probs: np.ndarray
    volumes: np.ndarray          # retained cell volumes
    points: np.ndarray           # retained coordinates
    q: np.ndarray                # committor restricted to retained states
    to_retained: dict            # original index -> retained position

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def m_eff(self) -> np.ndarray:
        """Stationary measure pi_eff |C| of the controlled chain."""
        return self.pi_eff * self.volumes


def build_controlled_chain(Q: RateMatrix, field: CommittorField, pi: np.ndarray,
                           vols: np.ndarray, A, eps: float) -> ControlledChain:
    """Remove A, tilt rates by q_j/q_i and build the exit distribution.

    A retained committor value at or below the underflow floor triggers one
    re-solve at a tighter tolerance; a persistent zero is an error (the
    tilt q_j / q_i is undefined at its neighbors).
    """
    A = np.unique(np.asarray(A, dtype=int))
    if len(A) == 0:
        raise ValueError("A must be nonempty")
    q = field.q
    n = Q.n
    keep = np.ones(n, dtype=bool)
    keep[A] = False
    states = np.where(keep)[0]
    if np.any(q[states] < Q_FLOOR):
        from .committor import solve_committor
        field = solve_committor(Q, field.A_indices, field.B_indices, tol=1e-14)
        q = field.q
        if np.any(q[states] < Q_FLOOR):
            bad = states[np.argmax(q[states] < Q_FLOOR)]
            raise ValueError(
                f"committor underflow ({q[bad]:.3e}) at retained state {bad} "
                "persists after re-solving at tolerance 1e-14")

    to_retained = {int(s): k for k, s in enumerate(states)}
    coo = Q.rates.tocoo()
    mask = keep[coo.row] & keep[coo.col]
    rows = coo.row[mask]
    cols = coo.col[mask]
    vals = coo.data[mask] * (q[cols] / q[rows])
    r_idx = np.searchsorted(states, rows)
    c_idx = np.searchsorted(states, cols)
    nr = len(states)
    rates = sp.csr_matrix((vals, (r_idx, c_idx)), shape=(nr, nr))
    rates.sort_indices()
    lam = np.asarray(rates.sum(axis=1)).ravel()
    if np.any(lam <= 0.0):
        bad = states[int(np.argmax(lam <= 0.0))]
        raise ValueError(f"retained state {bad} has no outgoing controlled rate")
    P = sp.csr_matrix(rates.multiply(1.0 / lam[:, None]))
    P.sort_indices()

    pi = np.asarray(pi, dtype=float)
    pi_eff = (q[states] ** 2) * pi[states]
    with np.errstate(divide="ignore"):
        u_eff = -eps * np.log(pi[states]) - 2.0 * eps * np.log(q[states])

    # exit distribution over the faces of A, aggregated over all a in A
    pts = Q.points
    weight: dict[int, float] = {}
    for a in A:
        for j in Q.neighbors(a):
            j = int(j)
            if not keep[j]:
                continue
            # q_j (pi_a + pi_j) |face| / dist, the reactive flux through the face
            w = q[j] * Q.rates[a, j] * pi[a] * vols[a]
            weight[j] = weight.get(j, 0.0) + float(w)
    if not weight:
        raise ValueError("A has no retained neighbors to exit through")
    exit_states = np.array(sorted(weight), dtype=int)
    exit_probs = np.array([weight[j] for j in exit_states])
    exit_probs /= exit_probs.sum()

    return ControlledChain(states, rates, lam, P, pi_eff, u_eff,
                           exit_states, exit_probs, vols[states].copy(),
                           pts[states].copy(), q[states].copy(), to_retained)


def effective_potential_field(U: np.ndarray, q: np.ndarray, eps: float) -> np.ndarray:
    """U^e = U - 2 eps ln q, +inf where the committor vanishes."""
    U = np.asarray(U, dtype=float)
    q = np.asarray(q, dtype=float)
    out = np.full_like(U, np.inf)
    pos = q > 0.0
    out[pos] = U[pos] - 2.0 * eps * np.log(q[pos])
    return out


def discrete_control_field(Q: RateMatrix, field: CommittorField) -> dict:
    """Feedback control per edge: v_ij = 2 (q_j - q_i)/|y_j - y_i| * 2/(q_i + q_j).

    Returns {(i, j): v_ij} over adjacency edges with i < j; the value for
    the reversed orientation is -v_ij (the field is antisymmetric).  Edges
    with both endpoints in A carry no control and are skipped.
    """
    q = field.q
    pts = Q.points
    in_A = np.zeros(len(q), dtype=bool)
    in_A[field.A_indices] = True
    out: dict[tuple[int, int], float] = {}
    coo = Q.rates.tocoo()
    for i, j in zip(coo.row.tolist(), coo.col.tolist()):
        if i >= j:
            continue
        if in_A[i] and in_A[j]:
            continue
        qsum = q[i] + q[j]
        if qsum <= 0.0:
            raise ValueError(f"vanishing committor sum on edge ({i}, {j})")
        dist = float(np.linalg.norm(pts[j] - pts[i]))
        out[(i, j)] = 2.0 * (q[j] - q[i]) / dist * 2.0 / qsum
    return out
