"""Continuous-time Markov generator on a tessellated point cloud.

Off-diagonal rates follow the finite-volume flux across shared cell
faces, Q_ij = (pi_i + pi_j) |face_ij| / (2 pi_i |C_i| |y_i - y_j|), which
is in detailed balance with the measure m_i = pi_i |C_i| by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = ["RateMatrix", "JumpChain", "build_generator", "jump_chain",
           "stationarity_residual"]


@dataclass(frozen=True)
class RateMatrix:
    """Sparse generator with zero row sums and its reference measure."""

    rates: sp.csr_matrix        # off-diagonal Q_ij >= 0, no diagonal stored
    pi: np.ndarray              # equilibrium weights (any common scale)
    volumes: np.ndarray
    points: np.ndarray

    @property
    def n(self) -> int:
        return self.rates.shape[0]

    @property
    def m(self) -> np.ndarray:
        """Stationary measure pi_i |C_i| of the jump process."""
        return self.pi * self.volumes

    @property
    def lam(self) -> np.ndarray:
        """Total jump rates, lam_i = sum_j Q_ij."""
        return np.asarray(self.rates.sum(axis=1)).ravel()

    def neighbors(self, i: int) -> np.ndarray:
        return self.rates.indices[self.rates.indptr[i]:self.rates.indptr[i + 1]]

    def apply(self, f: np.ndarray) -> np.ndarray:
        """(Q f)_i = sum_j Q_ij (f_j - f_i)."""
        return self.rates @ f - self.lam * f


@dataclass(frozen=True)
class JumpChain:
    lam: np.ndarray             # (n,) positive jump rates
    P: sp.csr_matrix            # transition probabilities, rows sum to 1


def build_generator(tess, pi: np.ndarray, cloud) -> RateMatrix:
    """Assemble the generator from tessellation geometry and weights."""
    pi = np.asarray(pi, dtype=float)
    n = tess.n
    if len(pi) != n or cloud.n != n:
        raise ValueError("weights, tessellation and cloud sizes differ")
    if np.any(pi <= 0.0):
        raise ValueError("all equilibrium weights must be positive")
    pts = cloud.points
    vols = tess.volumes

    rows, cols, vals = [], [], []
    for (i, j), area in tess.face_index.items():
        dist = float(np.linalg.norm(pts[i] - pts[j]))
        if dist <= 0.0:
            raise ValueError(f"zero distance between adjacent points {i}, {j}")
        flux = 0.5 * (pi[i] + pi[j]) * area / dist
        rows.append(i); cols.append(j); vals.append(flux / (pi[i] * vols[i]))
        rows.append(j); cols.append(i); vals.append(flux / (pi[j] * vols[j]))
    Q = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    Q.sort_indices()
    return RateMatrix(Q, pi, vols.copy(), pts.copy())


def jump_chain(Q: RateMatrix) -> JumpChain:
    """Embedded chain: P_ij = Q_ij / lam_i."""
    lam = Q.lam
    if np.any(lam <= 0.0):
        bad = int(np.argmax(lam <= 0.0))
        raise ValueError(f"isolated state {bad} has zero jump rate")
    P = sp.csr_matrix(Q.rates.multiply(1.0 / lam[:, None]))
    P.sort_indices()
    return JumpChain(lam, P)


def stationarity_residual(Q: RateMatrix, m: np.ndarray) -> float:
    """max_i |sum_j m_j Q_ji| / (lam_i m_i) for a candidate measure m."""
    m = np.asarray(m, dtype=float)
    lam = Q.lam
    net = Q.rates.T @ m - lam * m
    return float(np.max(np.abs(net) / (lam * m)))
