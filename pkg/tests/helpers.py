"""Shared constructions for the test suite: tiny chains and oracles."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from cloudtpt.generator import RateMatrix


def tiny_rate_matrix(rates, pi=None, vols=None, pts=None) -> RateMatrix:
    """RateMatrix from a dense off-diagonal rate array (diagonal ignored)."""
    R = np.asarray(rates, dtype=float).copy()
    np.fill_diagonal(R, 0.0)
    n = R.shape[0]
    pi = np.ones(n) if pi is None else np.asarray(pi, dtype=float)
    vols = np.ones(n) if vols is None else np.asarray(vols, dtype=float)
    pts = np.arange(n, dtype=float)[:, None] if pts is None else np.asarray(pts, dtype=float)
    return RateMatrix(sp.csr_matrix(R), pi, vols, pts)


def path_graph(n: int, rate: float = 1.0) -> RateMatrix:
    R = np.zeros((n, n))
    for i in range(n - 1):
        R[i, i + 1] = rate
        R[i + 1, i] = rate
    return tiny_rate_matrix(R)


def birth_death(up_rates, down_rates) -> tuple[RateMatrix, np.ndarray]:
    """Birth-death chain with its detailed-balance measure (vols = 1)."""
    a = np.asarray(up_rates, dtype=float)
    b = np.asarray(down_rates, dtype=float)
    n = len(a) + 1
    R = np.zeros((n, n))
    for i in range(n - 1):
        R[i, i + 1] = a[i]
        R[i + 1, i] = b[i]
    m = np.ones(n)
    for i in range(n - 1):
        m[i + 1] = m[i] * a[i] / b[i]
    return tiny_rate_matrix(R, pi=m), m


def birth_death_committor(up_rates, down_rates) -> np.ndarray:
    """Closed-form hit-B-before-A probabilities for A = {0}, B = {n-1}.

    With up rate a_j out of state j and down rate b_{j-1} out of state j,
    the committor increments satisfy g_j / g_{j-1} = b_{j-1} / a_j.
    """
    a = np.asarray(up_rates, dtype=float)
    b = np.asarray(down_rates, dtype=float)
    n = len(a) + 1
    g = np.ones(n - 1)
    for j in range(1, n - 1):
        g[j] = g[j - 1] * b[j - 1] / a[j]
    return np.concatenate([[0.0], np.cumsum(g) / g.sum()])


def random_reversible_chain(n: int, seed: int, p_edge: float = 0.6):
    """Connected random reversible chain with measure m and unit volumes."""
    rng = np.random.default_rng(seed)
    m = rng.uniform(0.5, 2.0, n)
    R = np.zeros((n, n))
    for i in range(n - 1):          # spanning path keeps it connected
        s = rng.uniform(0.2, 1.5)
        R[i, i + 1] = s / m[i]
        R[i + 1, i] = s / m[i + 1]
    for i in range(n):
        for j in range(i + 2, n):
            if rng.random() < p_edge:
                s = rng.uniform(0.2, 1.5)
                R[i, j] = s / m[i]
                R[j, i] = s / m[j]
    return tiny_rate_matrix(R, pi=m), m


def hexagonal_cloud(rows: int = 12, cols: int = 12, a: float = 0.31):
    pts = []
    for r in range(rows):
        for c in range(cols):
            pts.append((c * a + (r % 2) * a / 2.0, r * a * np.sqrt(3.0) / 2.0))
    return np.asarray(pts)


def hausdorff(P: np.ndarray, Q: np.ndarray) -> float:
    from scipy.spatial import cKDTree
    tp, tq = cKDTree(P), cKDTree(Q)
    return max(tq.query(P)[0].max(), tp.query(Q)[0].max())


def point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    t = float(np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def brute_force_capacity(n, edges, sources, targets) -> float:
    """Max over all simple paths of the minimum edge weight (DFS oracle)."""
    adj = {}
    for (i, j, w) in edges:
        adj.setdefault(i, []).append((j, w))
    best = [-1.0]

    def dfs(u, mn, seen):
        if u in targets:
            best[0] = max(best[0], mn)
            return
        for (v, w) in adj.get(u, []):
            if v not in seen:
                dfs(v, min(mn, w), seen | {v})

    for s in sources:
        dfs(s, np.inf, {s})
    return best[0]


def random_dag(rng, max_nodes: int = 12, p_edge: float = 0.45):
    """Random DAG along the identity topological order, weights in (0, 1)."""
    n = int(rng.integers(4, max_nodes + 1))
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p_edge:
                edges.append((i, j, float(rng.uniform(0.01, 1.0))))
    return n, edges
