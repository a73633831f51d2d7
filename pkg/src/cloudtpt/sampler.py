"""Kinetic Monte Carlo walks on the original and controlled chains.

The controlled walk starts from the reactive exit distribution of A,
draws exponential waiting times and next states by CDF inversion over
neighbors in ascending index order, and restarts from the exit
distribution each time it hits B; the stretches from exit to B-hit are
recorded as transition segments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .control import ControlledChain
from .generator import JumpChain

__all__ = ["TrajectoryRecord", "run_controlled_walk", "run_uncontrolled_walk",
           "occupation_statistics"]


@dataclass(frozen=True)
class TrajectoryRecord:
    states: np.ndarray           # (K,) visited state indices (original labels)
    dt: np.ndarray               # (K,) waiting times, all positive
    segments: list = field(default_factory=list)   # (start, end) inclusive ranges
    seed: int = 0

    @property
    def steps(self) -> int:
        return len(self.states)

    @property
    def total_time(self) -> float:
        return float(self.dt.sum())


def _row_cdf(P):
    """Per-state neighbor index arrays and cumulative probabilities."""
    idx = []
    cdf = []
    for i in range(P.shape[0]):
        lo, hi = P.indptr[i], P.indptr[i + 1]
        nbrs = P.indices[lo:hi]
        probs = P.data[lo:hi]
        order = np.argsort(nbrs)               # ascending index inversion order
        idx.append(nbrs[order])
        c = np.cumsum(probs[order])
        c[-1] = 1.0
        cdf.append(c)
    return idx, cdf


def run_controlled_walk(chain: ControlledChain, B, K_max: int, seed: int) -> TrajectoryRecord:
    """Algorithm-style controlled walk with restarts on every B hit."""
    B = np.unique(np.asarray(B, dtype=int))
    if len(B) == 0:
        raise ValueError("B must be nonempty")
    in_B = np.zeros(int(chain.states.max()) + 1, dtype=bool)
    in_B[B] = True
    if in_B[chain.states].sum() != len(B):
        raise ValueError("B must consist of retained states")

    rng = np.random.default_rng(seed)
    idx, cdf = _row_cdf(chain.P)
    lam = chain.lam
    states_orig = chain.states
    exit_cdf = np.cumsum(chain.exit_probs)
    exit_cdf[-1] = 1.0

    states = np.empty(K_max, dtype=int)
    dts = np.empty(K_max)
    segments = []

    def draw_exit() -> int:
        r = int(np.searchsorted(exit_cdf, rng.random(), side="right"))
        r = min(r, len(exit_cdf) - 1)
        return int(chain.to_retained[int(chain.exit_states[r])])

    cur = draw_exit()
    seg_start = 0
    k = 0
    while k < K_max:
        states[k] = states_orig[cur]
        dts[k] = rng.exponential(1.0 / lam[cur])
        if in_B[states_orig[cur]]:
            segments.append((seg_start, k))
            cur = draw_exit()
            seg_start = k + 1
        else:
            eta = rng.random()
            s = int(np.searchsorted(cdf[cur], eta, side="right"))
            cur = int(idx[cur][min(s, len(idx[cur]) - 1)])
        k += 1
    return TrajectoryRecord(states, dts, segments, seed)


def run_uncontrolled_walk(jump: JumpChain, A, B, K_max: int, seed: int) -> TrajectoryRecord:
    """Baseline walk under the original chain, counting A -> B crossings.

    Starts at the first state of A.  A segment is recorded each time the
    walk reaches B having visited A more recently than B.
    """
    A = np.unique(np.asarray(A, dtype=int))
    B = np.unique(np.asarray(B, dtype=int))
    if len(A) == 0 or len(B) == 0 or np.intersect1d(A, B).size:
        raise ValueError("A and B must be nonempty and disjoint")
    n = jump.P.shape[0]
    in_A = np.zeros(n, dtype=bool)
    in_A[A] = True
    in_B = np.zeros(n, dtype=bool)
    in_B[B] = True

    rng = np.random.default_rng(seed)
    idx, cdf = _row_cdf(jump.P)
    lam = jump.lam

    states = np.empty(K_max, dtype=int)
    dts = np.empty(K_max)
    segments = []
    cur = int(A[0])
    last_from_A = True
    seg_start = 0
    for k in range(K_max):
        states[k] = cur
        dts[k] = rng.exponential(1.0 / lam[cur])
        if in_B[cur] and last_from_A:
            segments.append((seg_start, k))
            last_from_A = False
        elif in_A[cur] and not last_from_A:
            last_from_A = True
            seg_start = k
        elif in_A[cur]:
            seg_start = k
        eta = rng.random()
        s = int(np.searchsorted(cdf[cur], eta, side="right"))
        cur = int(idx[cur][min(s, len(idx[cur]) - 1)])
    return TrajectoryRecord(states, dts, segments, seed)


def occupation_statistics(record: TrajectoryRecord):
    """Visit counts and total residence time per visited state."""
    states = record.states
    uniq, inv, counts = np.unique(states, return_inverse=True, return_counts=True)
    times = np.zeros(len(uniq))
    np.add.at(times, inv, record.dt)
    return uniq, counts, times
