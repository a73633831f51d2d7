"""Mean transition path by local time-weighted averaging of walk samples.

Each path point is replaced by the residence-time-weighted mean of the
visited states inside its collection ball, the path is reparameterized to
equal arc length and projected back onto the visited sample set; the
iteration stops when the projected index sequence is stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .sampler import TrajectoryRecord, occupation_statistics

__all__ = ["MeanPathState", "init_path", "collect_ball", "local_mean",
           "reparameterize", "iterate_mean_path", "default_ball_radius",
           "tune_ball_radius"]


@dataclass(frozen=True)
class MeanPathState:
    points: np.ndarray           # (M, dim) current discrete path
    indices: np.ndarray          # (M,) nearest visited-state labels, -1 pre-projection
    r0: float
    iteration: int = 0
    converged: bool = False
    empty_fraction: float = 0.0

    @property
    def M(self) -> int:
        return len(self.points)


class _VisitData:
    """Occupation-weighted visited points with a ball-query tree."""

    def __init__(self, traj: TrajectoryRecord, cloud):
        states, _, times = occupation_statistics(traj)
        self.states = states
        self.weights = times
        self.points = cloud.points[states]
        self.tree = cKDTree(self.points)

    def ball(self, p: np.ndarray, r0: float):
        hit = self.tree.query_ball_point(p, r0)
        return np.asarray(hit, dtype=int)

    def nearest(self, p: np.ndarray) -> int:
        _, k = self.tree.query(p)
        return int(k)


def init_path(A_point: np.ndarray, B_point: np.ndarray, M: int,
              traj: TrajectoryRecord, cloud) -> MeanPathState:
    """Chord from A to B snapped to the nearest visited samples."""
    if M < 3:
        raise ValueError(f"need at least 3 path points, got M={M}")
    A_point = np.asarray(A_point, dtype=float)
    B_point = np.asarray(B_point, dtype=float)
    if np.allclose(A_point, B_point):
        raise ValueError("degenerate path: A and B coincide")
    if traj.steps == 0:
        raise ValueError("empty trajectory record")
    data = _VisitData(traj, cloud)
    t = np.linspace(0.0, 1.0, M)[:, None]
    chord = (1.0 - t) * A_point[None, :] + t * B_point[None, :]
    pts = np.array([data.points[data.nearest(p)] for p in chord])
    idx = np.array([data.states[data.nearest(p)] for p in chord])
    pts[0] = A_point
    pts[-1] = B_point
    idx[0] = -1
    idx[-1] = -1
    return MeanPathState(pts, idx, r0=0.0)


def collect_ball(traj: TrajectoryRecord, cloud, p: np.ndarray, r0: float):
    """Visited states within r0 of p, weighted by accumulated residence time."""
    if r0 <= 0.0:
        raise ValueError("ball radius must be positive")
    data = _VisitData(traj, cloud)
    hit = data.ball(np.asarray(p, dtype=float), r0)
    return data.states[hit], data.weights[hit], data.points[hit]


def local_mean(points: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Residence-time-weighted Euclidean mean of a nonempty sample set."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = np.asarray(weights, dtype=float)
    if len(points) == 0:
        raise ValueError("empty sample set has no mean")
    total = weights.sum()
    if total <= 0.0:
        raise ValueError("weights must have positive total")
    return (points * weights[:, None]).sum(axis=0) / total


def _equal_arclength_pass(pts: np.ndarray) -> np.ndarray:
    """One linear-interpolation resampling at equal cumulative-length targets.

    The target L_m sits in the segment [S_j, S_j+1]; the new point takes the
    convex weight (L_m - S_j)/(S_j+1 - S_j) on the segment's far vertex, so a
    target coinciding with S_j returns vertex j exactly.
    """
    M = len(pts)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    S = np.concatenate([[0.0], np.cumsum(seg)])
    if S[-1] <= 0.0:
        raise ValueError("zero total path length")
    L = np.linspace(0.0, S[-1], M)
    j = np.clip(np.searchsorted(S, L[1:-1], side="right") - 1, 0, M - 2)
    denom = S[j + 1] - S[j]
    t = np.where(denom > 0.0, (L[1:-1] - S[j]) / np.where(denom > 0.0, denom, 1.0),
                 0.0)[:, None]
    out = np.empty_like(pts)
    out[0] = pts[0]
    out[-1] = pts[-1]
    out[1:-1] = (1.0 - t) * pts[j] + t * pts[j + 1]
    return out


def reparameterize(path_points: np.ndarray, rel_tol: float = 1e-12,
                   max_passes: int = 200) -> np.ndarray:
    """Redistribute the path points to equal consecutive chord lengths.

    A single interpolation pass lands the points on the old polyline at
    equal cumulative lengths, but the chords between the new points still
    differ where the polyline bends, so the pass is iterated to its fixed
    point.  Endpoints are preserved exactly.
    """
    pts = np.asarray(path_points, dtype=float)
    if len(pts) < 2:
        raise ValueError("need at least two path points")
    if len(pts) == 2:
        return pts.copy()
    for _ in range(max_passes):
        pts = _equal_arclength_pass(pts)
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        mean = seg.mean()
        if np.max(np.abs(seg - mean)) <= rel_tol * mean:
            break
    return pts


def default_ball_radius(cloud) -> float:
    """Five times the median nearest-neighbor spacing of the cloud."""
    tree = cKDTree(cloud.points)
    dist, _ = tree.query(cloud.points, k=2)
    return 5.0 * float(np.median(dist[:, 1]))


def tune_ball_radius(traj: TrajectoryRecord, cloud, state: MeanPathState,
                     r0: float, min_samples: int = 20, max_doublings: int = 10) -> float:
    """Double r0 until every collection ball holds min_samples visits."""
    data = _VisitData(traj, cloud)
    for _ in range(max_doublings + 1):
        counts = [len(data.ball(p, r0)) for p in state.points]
        if min(counts) >= min_samples:
            return r0
        r0 *= 2.0
    return r0


def iterate_mean_path(traj: TrajectoryRecord, cloud, state: MeanPathState,
                      L_max: int, tol: float = 1e-8,
                      history=None) -> MeanPathState:
    """Run the averaging loop until the projected path stabilizes.

    Stops when the projected index sequence repeats, the pre-projection
    displacement drops below tol, or L_max iterations elapse.  Empty balls
    keep their previous point; more than 20% empty aborts with guidance.
    """
    if state.r0 <= 0.0:
        raise ValueError("set a positive collection radius r0 on the state first")
    data = _VisitData(traj, cloud)
    pts = state.points.copy()
    idx = state.indices.copy()
    a_pt, b_pt = pts[0].copy(), pts[-1].copy()
    M = len(pts)
    seen = {idx.tobytes()}

    for it in range(1, L_max + 1):
        tilde = pts.copy()
        empty = 0
        for mth in range(1, M - 1):
            hit = data.ball(pts[mth], state.r0)
            if len(hit) == 0:
                empty += 1
                continue
            tilde[mth] = local_mean(data.points[hit], data.weights[hit])
        empty_frac = empty / max(M - 2, 1)
        if empty_frac > 0.20:
            raise ValueError(
                f"{empty} of {M - 2} collection balls are empty at r0={state.r0:.4g}; "
                "increase r0 (or sample a longer walk)")
        tilde[0] = a_pt
        tilde[-1] = b_pt
        hat = reparameterize(tilde)
        disp = float(np.max(np.linalg.norm(hat - pts, axis=1)))

        new_idx = idx.copy()
        new_pts = hat.copy()
        for mth in range(1, M - 1):
            kk = data.nearest(hat[mth])
            new_idx[mth] = data.states[kk]
            new_pts[mth] = data.points[kk]
        new_pts[0] = a_pt
        new_pts[-1] = b_pt

        # the projected iteration is deterministic on a finite state set, so
        # revisiting any earlier index sequence means it cycles from here on
        key = new_idx.tobytes()
        converged = key in seen or disp < tol
        seen.add(key)
        pts, idx = new_pts, new_idx
        if history is not None:
            history.append((it, disp, empty))
        if converged:
            return MeanPathState(pts, idx, state.r0, it, True, empty_frac)
    return MeanPathState(pts, idx, state.r0, L_max, False, empty_frac)
