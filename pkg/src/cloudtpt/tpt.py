"""Reactive statistics of the A -> B transition and the dominant path.

The reactive current J_ij = (pi_i + pi_j) |face_ij| (q_j - q_i) / (2 |y_i - y_j|)
is antisymmetric, divergence free away from A and B, and induces a
directed acyclic graph on which the dominant transition path is the
max-min-capacity route, found by recursive bottleneck splitting.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .committor import CommittorField
from .generator import RateMatrix

__all__ = ["ReactiveGraph", "DiscretePath", "reactive_density",
           "reactive_current", "transition_rate", "kirchhoff_residual",
           "bottleneck", "dominant_path", "current_profile"]


@dataclass(frozen=True)
class ReactiveGraph:
    """Directed positive-current edges with weights, plus node data."""

    current: sp.csr_matrix       # J_ij stored for q_j > q_i only (J > 0)
    q: np.ndarray
    A_indices: np.ndarray
    B_indices: np.ndarray
    signed: sp.csr_matrix = field(repr=False, default=None)  # full antisymmetric J

    @property
    def n(self) -> int:
        return self.current.shape[0]

    def edges(self):
        """Iterate (i, j, weight) over positive-current edges."""
        c = self.current.tocoo()
        return zip(c.row.tolist(), c.col.tolist(), c.data.tolist())

    def weight(self, i: int, j: int) -> float:
        return self.current[i, j]

    def out_neighbors(self, i: int) -> np.ndarray:
        return self.current.indices[self.current.indptr[i]:self.current.indptr[i + 1]]


@dataclass(frozen=True)
class DiscretePath:
    """Ordered node sequence with point coordinates and arc length."""

    nodes: np.ndarray            # (k,) state indices, -1 where off-cloud
    points: np.ndarray           # (k, dim)

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def arc_length(self) -> np.ndarray:
        seg = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        return np.concatenate([[0.0], np.cumsum(seg)])


def reactive_density(pi: np.ndarray, q: np.ndarray) -> np.ndarray:
    """rho^R_i = pi_i q_i (1 - q_i), the density of reactive excursions."""
    pi = np.asarray(pi, dtype=float)
    q = np.asarray(q, dtype=float)
    if pi.shape != q.shape:
        raise ValueError("pi and q length mismatch")
    return pi * q * (1.0 - q)


def reactive_current(Q: RateMatrix, pi: np.ndarray, field: CommittorField) -> ReactiveGraph:
    """Antisymmetric edge current of reactive trajectories.

    J_ij = m_i Q_ij (q_j - q_i) with m = pi |C|; equivalently the symmetric
    face flux times the committor increment, so J_ji = -J_ij exactly.
    """
    q = field.q
    m = np.asarray(pi, dtype=float) * Q.volumes
    coo = Q.rates.tocoo()
    # evaluate once per undirected edge and mirror with negation, so the
    # antisymmetry J_ji = -J_ij holds exactly in floating point
    upper = coo.row < coo.col
    iu, ju = coo.row[upper], coo.col[upper]
    j_up = m[iu] * coo.data[upper] * (q[ju] - q[iu])
    rows = np.concatenate([iu, ju])
    cols = np.concatenate([ju, iu])
    vals = np.concatenate([j_up, -j_up])
    signed = sp.csr_matrix((vals, (rows, cols)), shape=Q.rates.shape)
    pos = vals > 0.0
    positive = sp.csr_matrix((vals[pos], (rows[pos], cols[pos])),
                             shape=Q.rates.shape)
    positive.sort_indices()
    signed.sort_indices()
    return ReactiveGraph(positive, q.copy(), field.A_indices.copy(),
                         field.B_indices.copy(), signed)


def transition_rate(graph: ReactiveGraph) -> float:
    """k_AB: signed current out of the A set."""
    total = 0.0
    for a in graph.A_indices:
        row = graph.signed.getrow(a)
        total += row.sum()
    return float(total)


def kirchhoff_residual(graph: ReactiveGraph) -> np.ndarray:
    """Net current imbalance |sum_j J_ij| per state (zero at interior states)."""
    return np.abs(np.asarray(graph.signed.sum(axis=1)).ravel())


def _bottleneck_on(rows, cols, wts, n, sources, targets):
    """Max-min capacity edge via binary search over distinct edge weights."""
    src = np.asarray(sorted(sources), dtype=int)
    tgt_mask = np.zeros(n, dtype=bool)
    tgt_mask[list(targets)] = True

    def reaches(level: float) -> np.ndarray:
        keep = wts >= level
        adj = sp.csr_matrix((wts[keep], (rows[keep], cols[keep])), shape=(n, n))
        seen = np.zeros(n, dtype=bool)
        stack = [s for s in src]
        seen[src] = True
        while stack:
            u = stack.pop()
            for v in adj.indices[adj.indptr[u]:adj.indptr[u + 1]]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        return seen

    distinct = np.unique(wts)
    lo, hi = 0, len(distinct) - 1
    # invariant: reachable at distinct[lo]; search the largest feasible level
    seen = reaches(distinct[lo])
    if not seen[tgt_mask].any():
        raise ValueError("B unreachable from A in the positive-current graph")
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if reaches(distinct[mid])[tgt_mask].any():
            lo = mid
        else:
            hi = mid - 1
    capacity = distinct[lo]

    # surviving path at the critical level; its minimum edge is the bottleneck
    keep = wts >= capacity
    adj = sp.csr_matrix((wts[keep], (rows[keep], cols[keep])), shape=(n, n))
    parent = np.full(n, -1, dtype=int)
    seen = np.zeros(n, dtype=bool)
    stack = [s for s in src]
    seen[src] = True
    hit = -1
    while stack:
        u = stack.pop()
        if tgt_mask[u]:
            hit = u
            break
        for v in adj.indices[adj.indptr[u]:adj.indptr[u + 1]]:
            if not seen[v]:
                seen[v] = True
                parent[v] = u
                stack.append(v)
    if hit < 0:
        for s in src:
            if tgt_mask[s]:
                hit = s
                break
    path = [hit]
    while parent[path[-1]] >= 0:
        path.append(parent[path[-1]])
    path.reverse()

    candidates = [(path[k], path[k + 1]) for k in range(len(path) - 1)
                  if adj[path[k], path[k + 1]] <= capacity * (1 + 1e-15)]
    ties = [(i, j) for (i, j) in candidates if adj[i, j] == capacity]
    if not ties:
        ties = candidates
    b1, b2 = min(ties)
    return (int(b1), int(b2)), float(capacity), len(ties) > 1


def bottleneck(graph: ReactiveGraph, A=None, B=None):
    """The dynamical bottleneck edge: argmin J over the max-min-capacity path.

    Returns ((b1, b2), capacity).  Ties at the bottleneck weight are broken
    by smallest (i, j) and reported through a warning.
    """
    A = graph.A_indices if A is None else np.asarray(A, dtype=int)
    B = graph.B_indices if B is None else np.asarray(B, dtype=int)
    c = graph.current.tocoo()
    (b1, b2), cap, tied = _bottleneck_on(c.row, c.col, c.data, graph.n, A, B)
    if tied:
        warnings.warn(f"bottleneck weight {cap!r} is tied; edge ({b1}, {b2}) "
                      "chosen by lexicographic order", stacklevel=2)
    return (b1, b2), cap


def dominant_path(graph: ReactiveGraph, A=None, B=None, cloud_points=None) -> DiscretePath:
    """Max-min-capacity reactive path from A to B by bottleneck recursion.

    Each level finds the bottleneck (b1, b2), keeps only edges strictly
    above its weight, restricts to the committor sublevel (suplevel) sets
    of b1 (b2) and recurses toward the two endpoints.
    """
    A = graph.A_indices if A is None else np.asarray(A, dtype=int)
    B = graph.B_indices if B is None else np.asarray(B, dtype=int)
    q = graph.q
    n = graph.n
    c = graph.current.tocoo()
    rows0, cols0, wts0 = c.row, c.col, c.data

    def rec(rows, cols, wts, sources, targets) -> list[int]:
        src = set(int(s) for s in sources)
        tgt = set(int(t) for t in targets)
        common = src & tgt
        if common:
            return [min(common)]
        if len(rows) == 0:
            raise ValueError("dominant path recursion reached an empty subgraph")
        (b1, b2), cap, _ = _bottleneck_on(rows, cols, wts, n, src, tgt)

        # strict removal is only safe when the edge weights are distinct; with
        # ties it can disconnect the subproblems, so keep equal-weight edges.
        # The bottleneck edge itself always drops out: it spans V_L -> V_R.
        keep = wts >= cap
        kr, kc, kw = rows[keep], cols[keep], wts[keep]
        left_nodes = q <= q[b1]
        right_nodes = q >= q[b2]

        if b1 in src:
            left = [b1]
        else:
            lmask = left_nodes[kr] & left_nodes[kc]
            lsrc = [s for s in src if left_nodes[s]]
            if not lsrc:
                raise ValueError(
                    f"empty left subgraph under bottleneck ({b1}, {b2})")
            left = rec(kr[lmask], kc[lmask], kw[lmask], lsrc, {b1})
        if b2 in tgt:
            right = [b2]
        else:
            rmask = right_nodes[kr] & right_nodes[kc]
            rtgt = [t for t in tgt if right_nodes[t]]
            if not rtgt:
                raise ValueError(
                    f"empty right subgraph under bottleneck ({b1}, {b2})")
            right = rec(kr[rmask], kc[rmask], kw[rmask], {b2}, rtgt)
        return left + right

    nodes = rec(rows0, cols0, wts0, A, B)
    nodes = np.asarray(nodes, dtype=int)
    dq = np.diff(q[nodes])
    if np.any(dq <= 0.0):
        raise AssertionError("committor not strictly increasing along dominant path")
    pts = cloud_points[nodes] if cloud_points is not None else np.zeros((len(nodes), 0))
    return DiscretePath(nodes, pts)


def current_profile(path: DiscretePath, graph: ReactiveGraph):
    """Edge weights along a path, with cumulative arc positions for plotting."""
    nodes = path.nodes
    out = []
    arc = path.arc_length if path.points.size else np.arange(len(nodes), dtype=float)
    for k in range(len(nodes) - 1):
        w = graph.current[nodes[k], nodes[k + 1]]
        if w <= 0.0:
            raise ValueError(f"path nodes {nodes[k]} -> {nodes[k+1]} are not an edge")
        out.append((float(arc[k]), float(w)))
    return out
