"""Point clouds on manifolds and their approximate Voronoi tessellation.

Cell volumes and face areas are estimated per point by projecting the
k nearest neighbors onto a PCA tangent plane and clipping the local
Voronoi cell of the center against the bisector half-planes.  In the flat
case (ambient dimension equals intrinsic dimension) this reproduces the
exact Voronoi diagram for interior points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "PointCloud",
    "Tessellation",
    "TangentFrame",
    "sample_sphere_uniform",
    "sample_torus_uniform",
    "sphere_grid",
    "build_tessellation",
]


@dataclass(frozen=True)
class PointCloud:
    """Sample points in R^ambient_dim assumed to lie near a d-manifold."""

    points: np.ndarray          # (n, ambient_dim)
    intrinsic_dim: int = 2

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float))
        object.__setattr__(self, "points", pts)
        if pts.ndim != 2 or pts.shape[0] < 2:
            raise ValueError("need at least two points, shaped (n, dim)")
        if not np.all(np.isfinite(pts)):
            bad = int(np.argmax(~np.isfinite(pts).all(axis=1)))
            raise ValueError(f"non-finite coordinate at point {bad}")
        # coincident points would break bisector construction downstream
        tree = cKDTree(pts)
        dist, idx = tree.query(pts, k=2)
        if np.any(dist[:, 1] <= 0.0):
            i = int(np.argmax(dist[:, 1] <= 0.0))
            raise ValueError(f"coincident points {i} and {int(idx[i, 1])}")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class TangentFrame:
    origin: int
    basis: np.ndarray           # (d, ambient_dim), orthonormal rows

    def __post_init__(self):
        B = self.basis
        G = B @ B.T
        if not np.allclose(G, np.eye(B.shape[0]), atol=1e-10):
            raise ValueError("tangent basis not orthonormal")


@dataclass(frozen=True)
class Tessellation:
    """Cell volumes, symmetric face areas and the induced adjacency."""

    volumes: np.ndarray                     # (n,) positive
    face_index: dict = field(repr=False)    # (i, j) with i < j -> area > 0
    neighbors: list = field(repr=False)     # neighbors[i]: sorted np.ndarray
    clipped: np.ndarray = None              # bool mask of disk-clipped cells

    def face(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        return self.face_index.get((min(i, j), max(i, j)), 0.0)

    @property
    def n(self) -> int:
        return len(self.volumes)

    def connected_components(self) -> list[np.ndarray]:
        n = self.n
        seen = np.full(n, -1, dtype=int)
        comps = []
        for s in range(n):
            if seen[s] >= 0:
                continue
            stack = [s]
            seen[s] = len(comps)
            members = [s]
            while stack:
                u = stack.pop()
                for v in self.neighbors[u]:
                    if seen[v] < 0:
                        seen[v] = len(comps)
                        members.append(v)
                        stack.append(v)
            comps.append(np.array(sorted(members)))
        return comps


def sample_sphere_uniform(n: int, seed: int) -> PointCloud:
    """n points uniform w.r.t. surface area on the unit sphere."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return PointCloud(v, intrinsic_dim=2)


def sample_torus_uniform(n: int, R: float, r: float, seed: int,
                         angle_uniform: bool = False) -> PointCloud:
    """n points on the torus (R, r), uniform w.r.t. surface area.

    Surface-area uniformity needs density proportional to R + r*cos(theta)
    in the angle chart; realized by rejection on theta.  With
    ``angle_uniform`` the angles themselves are uniform instead.
    """
    if not (R > r > 0):
        raise ValueError(f"need R > r > 0, got R={R}, r={r}")
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    rng = np.random.default_rng(seed)
    phi = rng.uniform(0.0, 2.0 * np.pi, size=n)
    if angle_uniform:
        theta = rng.uniform(-np.pi, np.pi, size=n)
    else:
        theta = np.empty(n)
        filled = 0
        while filled < n:
            m = 2 * (n - filled) + 16
            cand = rng.uniform(-np.pi, np.pi, size=m)
            acc = rng.uniform(0.0, 1.0, size=m) * (R + r) < (R + r * np.cos(cand))
            take = cand[acc][: n - filled]
            theta[filled:filled + len(take)] = take
            filled += len(take)
    ring = R + r * np.cos(theta)
    pts = np.stack([ring * np.cos(phi), ring * np.sin(phi), r * np.sin(theta)], axis=1)
    return PointCloud(pts, intrinsic_dim=2)


def sphere_grid(n: int) -> PointCloud:
    """Deterministic quasi-uniform sphere cover (golden-angle latitude bands)."""
    k = np.arange(n, dtype=float)
    z = 1.0 - (2.0 * k + 1.0) / n
    phi = k * np.pi * (3.0 - np.sqrt(5.0))
    s = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    return PointCloud(np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1),
                      intrinsic_dim=2)


def _tangent_basis(center: np.ndarray, nbrs: np.ndarray, d: int) -> np.ndarray:
    """Top-d principal directions of the centered neighborhood."""
    X = np.vstack([center[None, :], nbrs])
    X = X - X.mean(axis=0)
    _, s, vt = np.linalg.svd(X, full_matrices=False)
    if s[d - 1] <= 1e-12 * max(s[0], 1e-300):
        raise ValueError("degenerate local geometry: PCA rank below intrinsic dim")
    return vt[:d]


def _clip_halfplane(poly: np.ndarray, nrm: np.ndarray, off: float) -> np.ndarray:
    """Intersect convex polygon with {x : x . nrm <= off} (Sutherland-Hodgman)."""
    if len(poly) == 0:
        return poly
    dist = poly @ nrm - off
    inside = dist <= 0.0
    if inside.all():
        return poly
    out = []
    m = len(poly)
    for a in range(m):
        b = (a + 1) % m
        if inside[a]:
            out.append(poly[a])
        if inside[a] != inside[b]:
            t = dist[a] / (dist[a] - dist[b])
            out.append(poly[a] + t * (poly[b] - poly[a]))
    return np.asarray(out) if out else np.empty((0, 2))


def _polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _disk_polygon(radius: float, sides: int = 96) -> np.ndarray:
    ang = np.linspace(0.0, 2.0 * np.pi, sides, endpoint=False)
    return radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)


def build_tessellation(cloud: PointCloud, k: int = 20) -> Tessellation:
    """Approximate Voronoi volumes, face areas and adjacency from k-NN geometry.

    Per point: project the k nearest neighbors to the PCA tangent plane,
    clip the cell of the (projected) center against each bisector
    half-plane, and read off the cell area and shared edge lengths.  Cells
    not bounded by the half-planes are clipped to the k-NN radius disk and
    flagged.  One-sided face areas are then symmetrized by averaging and
    the adjacency is the union of both sides.
    """
    d = cloud.intrinsic_dim
    if d != 2:
        raise NotImplementedError("tessellation implemented for intrinsic dim 2")
    if k < d + 2:
        raise ValueError(f"need k >= d + 2 = {d + 2}, got {k}")
    if k >= cloud.n:
        raise ValueError(f"k={k} must be below the point count {cloud.n}")

    pts = cloud.points
    tree = cKDTree(pts)
    _, knn = tree.query(pts, k=k + 1)

    n = cloud.n
    volumes = np.zeros(n)
    clipped = np.zeros(n, dtype=bool)
    one_sided: dict[tuple[int, int], float] = {}

    for i in range(n):
        nbr_idx = knn[i, 1:]
        nbrs = pts[nbr_idx]
        basis = _tangent_basis(pts[i], nbrs, d)
        proj = (nbrs - pts[i]) @ basis.T          # center projects to origin
        radii = np.linalg.norm(proj, axis=1)
        rmax = radii.max()

        poly = _disk_polygon(rmax)
        order = np.argsort(radii)                 # near bisectors cut most
        for jj in order:
            t = proj[jj]
            poly = _clip_halfplane(poly, t, 0.5 * (t @ t))
            if len(poly) < 3:
                break
        if len(poly) < 3:
            raise ValueError(f"empty tessellation cell at point {i}")

        # a vertex at the disk rim means the half-planes left the cell open
        vr = np.linalg.norm(poly, axis=1)
        clipped[i] = bool(np.any(vr > rmax * (1.0 - 1e-9)))
        volumes[i] = _polygon_area(poly)

        # shared edge length with neighbor j: cell boundary on j's bisector
        for jj in range(k):
            t = proj[jj]
            off = 0.5 * (t @ t)
            dist = poly @ t - off
            on = np.abs(dist) <= 1e-9 * max(off, 1e-30)
            if np.count_nonzero(on) >= 2:
                verts = poly[on]
                # farthest pair among collinear vertices
                dmax = 0.0
                for a in range(len(verts) - 1):
                    dmax = max(dmax, float(np.max(
                        np.linalg.norm(verts[a + 1:] - verts[a], axis=1))))
                if dmax > 0.0:
                    j = int(nbr_idx[jj])
                    key = (min(i, j), max(i, j))
                    prev = one_sided.get(key)
                    if prev is None:
                        one_sided[key] = [0.0, 0.0]
                        prev = one_sided[key]
                    prev[0 if i < j else 1] = dmax

    faces = {key: 0.5 * (ab[0] + ab[1]) for key, ab in one_sided.items()
             if ab[0] + ab[1] > 0.0}
    neighbors = [[] for _ in range(n)]
    for (i, j) in faces:
        neighbors[i].append(j)
        neighbors[j].append(i)
    neighbors = [np.array(sorted(v), dtype=int) for v in neighbors]

    if np.any(volumes <= 0.0):
        bad = int(np.argmax(volumes <= 0.0))
        raise ValueError(f"non-positive cell volume at point {bad}")
    return Tessellation(volumes, faces, neighbors, clipped)
