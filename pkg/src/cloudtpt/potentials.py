"""Analytic energy landscapes and their lifts to embedded manifolds.

The plane landscapes (four-term exponential sum, optionally with an
oscillatory perturbation) are the synthetic test beds; sphere and torus
variants are obtained by pulling the plane potential back through the
stereographic projection and an angle chart respectively.  A tabulated
periodic grid covers landscapes that arrive as data rather than formulas.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "MuellerParams",
    "Landscape",
    "StationaryPoint",
    "mueller",
    "mueller_landscape",
    "mueller_perturbed",
    "mueller_perturbed_landscape",
    "pullback_sphere",
    "pullback_torus",
    "grid_landscape",
    "equilibrium_weights",
    "shifted_weights",
    "find_stationary_points",
    "sphere_lift",
    "torus_embed",
    "torus_angles",
]

# exp(x) overflows double precision just above x = 709.78
_EXP_MAX = 700.0


@dataclass(frozen=True)
class MuellerParams:
    """Coefficients of the four-term exponential landscape."""

    A: tuple = (-2.0, -1.0, -1.7, 0.15)
    a: tuple = (-1.0, -1.0, -6.5, 0.7)
    b: tuple = (0.0, 0.0, 11.0, 0.6)
    c: tuple = (-10.0, -10.0, -6.5, 0.7)
    alpha: tuple = (1.0, 0.0, -0.5, -1.0)
    beta: tuple = (0.0, 0.5, 1.5, 1.0)


@dataclass(frozen=True)
class Landscape:
    """An energy evaluator with optional analytic gradient.

    ``evaluate`` maps an (m, dim) array of points to m energies;
    ``gradient`` (when not None) maps the same to (m, dim) gradients.
    ``domain`` tags the geometry: plane | sphere | torus | tabulated-grid.
    """

    evaluate: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray] | None
    domain: str
    dim: int
    params: dict = dataclasses.field(default_factory=dict)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self.evaluate(pts)

    def grad(self, pts: np.ndarray) -> np.ndarray:
        if self.gradient is None:
            raise ValueError("landscape has no analytic gradient")
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self.gradient(pts)


@dataclass(frozen=True)
class StationaryPoint:
    location: np.ndarray          # plane coordinates
    kind: str                     # "minimum" | "saddle" | "maximum"
    energy: float
    grad_norm: float


def _mueller_terms(X, Y, p: MuellerParams):
    """Exponent arguments and weights of the four terms, vectorized."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    dx = X[..., None] - np.array(p.alpha)
    dy = Y[..., None] - np.array(p.beta)
    a = np.array(p.a)
    b = np.array(p.b)
    c = np.array(p.c)
    args = a * dx * dx + b * dx * dy + c * dy * dy
    return dx, dy, args


def mueller(X, Y, params: MuellerParams | None = None):
    """Four-exponential landscape value and analytic gradient.

    Returns (U, grad) where grad has shape (..., 2).  Exponent arguments
    above the double-precision overflow threshold yield +inf energies
    (the quadratic form of the positive term dominates far from origin).
    """
    p = params or MuellerParams()
    dx, dy, args = _mueller_terms(X, Y, p)
    A = np.array(p.A)
    with np.errstate(over="ignore"):
        ex = np.exp(np.minimum(args, _EXP_MAX))
        terms = A * ex
        U = terms.sum(axis=-1)
        gx = (terms * (2.0 * np.array(p.a) * dx + np.array(p.b) * dy)).sum(axis=-1)
        gy = (terms * (np.array(p.b) * dx + 2.0 * np.array(p.c) * dy)).sum(axis=-1)
    # saturated terms make U effectively infinite
    overflow = (args >= _EXP_MAX).any(axis=-1)
    if np.any(overflow):
        U = np.where(overflow, np.inf, U)
    return U, np.stack([gx, gy], axis=-1)


def mueller_landscape(params: MuellerParams | None = None) -> Landscape:
    p = params or MuellerParams()

    def ev(pts):
        U, _ = mueller(pts[:, 0], pts[:, 1], p)
        return U

    def gr(pts):
        _, g = mueller(pts[:, 0], pts[:, 1], p)
        return g

    return Landscape(ev, gr, "plane", 2, {"mueller": p})


def mueller_perturbed(X, Y, params: MuellerParams | None = None,
                      amplitude: float = 0.15, frequency: float = 10.0 * np.pi):
    """Landscape plus small sinusoidal oscillations: U + amp*sin(fX)sin(fY)."""
    U, g = mueller(X, Y, params)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    sx, cx = np.sin(frequency * X), np.cos(frequency * X)
    sy, cy = np.sin(frequency * Y), np.cos(frequency * Y)
    Up = U + amplitude * sx * sy
    gp = np.stack([g[..., 0] + amplitude * frequency * cx * sy,
                   g[..., 1] + amplitude * frequency * sx * cy], axis=-1)
    return Up, gp


def mueller_perturbed_landscape(params: MuellerParams | None = None) -> Landscape:
    def ev(pts):
        U, _ = mueller_perturbed(pts[:, 0], pts[:, 1], params)
        return U

    def gr(pts):
        _, g = mueller_perturbed(pts[:, 0], pts[:, 1], params)
        return g

    return Landscape(ev, gr, "plane", 2, {})


def pullback_sphere(landscape: Landscape) -> Landscape:
    """Pull a plane landscape back to the unit sphere via X=x/(1-z), Y=y/(1-z).

    Evaluation at or numerically indistinguishable from the north pole is
    rejected; far enough off the pole the value may legitimately overflow
    to +inf, which is returned rather than NaN.
    """
    if landscape.domain != "plane":
        raise ValueError("sphere pullback requires a plane landscape")

    def project(pts):
        z = pts[:, 2]
        denom = 1.0 - z
        if np.any(denom <= 1e-15):
            bad = int(np.argmax(denom <= 1e-15))
            raise ValueError(
                f"stereographic chart undefined at the north pole (point {bad}, z={z[bad]!r})")
        return np.stack([pts[:, 0] / denom, pts[:, 1] / denom], axis=1), denom

    def ev(pts):
        XY, _ = project(pts)
        return landscape.evaluate(XY)

    gr = None
    if landscape.gradient is not None:
        def gr(pts):
            XY, denom = project(pts)
            g2 = landscape.gradient(XY)
            gX, gY = g2[:, 0], g2[:, 1]
            X, Y = XY[:, 0], XY[:, 1]
            # chain rule through (x, y, z) -> (x/(1-z), y/(1-z))
            gx = gX / denom
            gy = gY / denom
            gz = (gX * X + gY * Y) / denom
            return np.stack([gx, gy, gz], axis=1)

    return Landscape(ev, gr, "sphere", 3, dict(landscape.params))


def torus_embed(theta, phi, R: float, r: float) -> np.ndarray:
    """Embed angle pairs on the torus of radii (R, r) in R^3."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ring = R + r * np.cos(theta)
    return np.stack([ring * np.cos(phi), ring * np.sin(phi), r * np.sin(theta)], axis=-1)


def torus_angles(pts: np.ndarray, R: float, r: float, tol: float = 1e-8):
    """Recover (theta, phi) from embedded torus points; rejects off-torus input."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    rho = np.hypot(pts[:, 0], pts[:, 1])
    resid = np.abs((rho - R) ** 2 + pts[:, 2] ** 2 - r * r)
    if np.any(resid > tol * max(1.0, r * r)):
        bad = int(np.argmax(resid))
        raise ValueError(f"point {bad} lies off the torus (residual {resid[bad]:.3e})")
    theta = np.arctan2(pts[:, 2] / r, (rho - R) / r)
    theta = np.where(theta >= np.pi, theta - 2.0 * np.pi, theta)  # [-pi, pi)
    phi = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * np.pi)   # [0, 2pi)
    return theta, phi


def pullback_torus(landscape: Landscape, R: float, r: float) -> Landscape:
    """Pull a plane landscape back to the torus through U(r*theta, R*phi)."""
    if landscape.domain != "plane":
        raise ValueError("torus pullback requires a plane landscape")
    if not (R > r > 0):
        raise ValueError(f"need R > r > 0, got R={R}, r={r}")

    def angles_to_plane(pts):
        theta, phi = torus_angles(pts, R, r)
        return np.stack([r * theta, R * phi], axis=1)

    def ev(pts):
        return landscape.evaluate(angles_to_plane(np.atleast_2d(pts)))

    # no analytic ambient gradient: the chart is discontinuous at the seams
    return Landscape(ev, None, "torus", 3, dict(landscape.params, R=R, r=r))


def grid_landscape(phi_grid: np.ndarray, psi_grid: np.ndarray, U_grid: np.ndarray,
                   R: float, r: float) -> Landscape:
    """Tabulated free energy on a periodic (phi, psi) grid, lifted to the torus.

    Bilinear interpolation with periodic wrap on [-pi, pi)^2.  The embedded
    convention matches the dihedral map: poloidal angle = phi, toroidal = psi.
    """
    phi_grid = np.asarray(phi_grid, dtype=float)
    psi_grid = np.asarray(psi_grid, dtype=float)
    U_grid = np.asarray(U_grid, dtype=float)
    nphi, npsi = len(phi_grid), len(psi_grid)
    if U_grid.shape != (nphi, npsi):
        raise ValueError(f"grid shape {U_grid.shape} != ({nphi}, {npsi})")
    dphi = 2.0 * np.pi / nphi
    dpsi = 2.0 * np.pi / npsi
    if not (np.allclose(np.diff(phi_grid), dphi) and np.allclose(np.diff(psi_grid), dpsi)):
        raise ValueError("grid must be uniform over [-pi, pi)^2")

    def interp(phi, psi):
        fi = (np.asarray(phi) - phi_grid[0]) / dphi
        fj = (np.asarray(psi) - psi_grid[0]) / dpsi
        i0 = np.floor(fi).astype(int)
        j0 = np.floor(fj).astype(int)
        ti = fi - i0
        tj = fj - j0
        i0 %= nphi
        j0 %= npsi
        i1 = (i0 + 1) % nphi
        j1 = (j0 + 1) % npsi
        return ((1 - ti) * (1 - tj) * U_grid[i0, j0] + ti * (1 - tj) * U_grid[i1, j0]
                + (1 - ti) * tj * U_grid[i0, j1] + ti * tj * U_grid[i1, j1])

    def ev(pts):
        theta, phi = torus_angles(np.atleast_2d(pts), R, r)
        # embedding uses theta=dihedral phi, phi=dihedral psi
        psi = np.where(phi >= np.pi, phi - 2.0 * np.pi, phi)
        return interp(theta, psi)

    return Landscape(ev, None, "tabulated-grid", 3, {"R": R, "r": r})


def sphere_lift(XY: np.ndarray) -> np.ndarray:
    """Inverse stereographic projection of plane points onto the unit sphere."""
    XY = np.atleast_2d(np.asarray(XY, dtype=float))
    s = (XY ** 2).sum(axis=1)
    return np.stack([2.0 * XY[:, 0] / (1.0 + s),
                     2.0 * XY[:, 1] / (1.0 + s),
                     (s - 1.0) / (1.0 + s)], axis=1)


def shifted_weights(U: np.ndarray, eps: float):
    """Boltzmann weights relative to the sampled minimum.

    Returns (pi, shift) with pi_i = exp(-(U_i - shift)/eps) and
    shift = min_i U_i, so that the underflow-prone common factor
    exp(-shift/eps) is carried symbolically by the caller.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    U = np.asarray(U, dtype=float)
    if not np.all(np.isfinite(U)):
        bad = int(np.argmax(~np.isfinite(U)))
        raise ValueError(f"non-finite energy at sample {bad}")
    shift = float(U.min())
    pi = np.exp(-(U - shift) / eps)
    if np.any(pi <= 0.0):
        bad = int(np.argmax(pi <= 0.0))
        raise ValueError(
            f"weight underflow at sample {bad}: spread {(U.max()-shift):.3g} too "
            f"large for eps={eps}; cap the energies first")
    return pi, shift


def equilibrium_weights(cloud, landscape: Landscape, eps: float) -> np.ndarray:
    """Per-sample equilibrium weights exp(-U/eps), shifted by min U."""
    U = landscape(cloud.points)
    pi, _ = shifted_weights(U, eps)
    return pi


def _hessian_fd(landscape: Landscape, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central-difference Hessian from the analytic gradient."""
    d = len(x)
    H = np.zeros((d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        gp = landscape.grad((x + e)[None, :])[0]
        gm = landscape.grad((x - e)[None, :])[0]
        H[:, k] = (gp - gm) / (2.0 * h)
    return 0.5 * (H + H.T)


def find_stationary_points(landscape: Landscape, starts: Sequence[np.ndarray],
                           grad_tol: float = 1e-9, max_iter: int = 200,
                           dedupe_tol: float = 1e-6) -> list[StationaryPoint]:
    """Newton iteration on grad U = 0 from several starts, deduplicated.

    Non-convergent starts are skipped.  Points are classified by the
    Hessian eigenvalue signs (finite differences of the analytic gradient).
    """
    if landscape.gradient is None:
        raise ValueError("stationary point search needs a gradient")
    found: list[StationaryPoint] = []
    for start in starts:
        x = np.asarray(start, dtype=float).copy()
        ok = False
        for _ in range(max_iter):
            g = landscape.grad(x[None, :])[0]
            if not np.all(np.isfinite(g)):
                break
            if np.linalg.norm(g) < grad_tol:
                ok = True
                break
            H = _hessian_fd(landscape, x)
            try:
                step = np.linalg.solve(H, -g)
            except np.linalg.LinAlgError:
                break
            if np.linalg.norm(step) > 1.0:
                step *= 1.0 / np.linalg.norm(step)
            x = x + step
        if not ok:
            continue
        if any(np.linalg.norm(x - s.location) < dedupe_tol for s in found):
            continue
        H = _hessian_fd(landscape, x)
        eig = np.linalg.eigvalsh(H)
        if np.all(eig > 0):
            kind = "minimum"
        elif np.all(eig < 0):
            kind = "maximum"
        else:
            kind = "saddle"
        U = float(landscape(x[None, :])[0])
        found.append(StationaryPoint(x, kind, U, float(np.linalg.norm(
            landscape.grad(x[None, :])[0]))))
    found.sort(key=lambda s: (s.kind, s.energy))
    return found
