"""Zero-temperature reference: string-method MEP and the path action.

For gradient systems the minimum energy path minimizes the escape action,
so the simple string iteration (tangential descent step + arc-length
redistribution) serves as the small-noise oracle against which the
finite-noise rates are compared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .meanpath import reparameterize
from .potentials import Landscape
from .tpt import DiscretePath

__all__ = ["StringState", "string_mep", "fw_action"]


@dataclass(frozen=True)
class StringState:
    images: np.ndarray
    step: float
    residual: float
    iterations: int
    converged: bool


def _manifold_maps(landscape: Landscape):
    """(nearest-point projection, tangential component) for the manifold."""
    if landscape.domain == "sphere":
        def proj(x):
            return x / np.linalg.norm(x, axis=-1, keepdims=True)

        def tang(x, v):
            n = proj(x)
            return v - (v * n).sum(axis=-1, keepdims=True) * n
        return proj, tang
    if landscape.domain in ("torus", "tabulated-grid"):
        R, r = landscape.params["R"], landscape.params["r"]

        def proj(x):
            rho = np.maximum(np.hypot(x[:, 0], x[:, 1]), 1e-300)
            cx, cy = x[:, 0] / rho, x[:, 1] / rho
            dx = rho - R
            s = np.maximum(np.hypot(dx, x[:, 2]), 1e-300)
            return np.stack([(R + r * dx / s) * cx,
                             (R + r * dx / s) * cy,
                             r * x[:, 2] / s], axis=1)

        def tang(x, v):
            rho = np.maximum(np.hypot(x[:, 0], x[:, 1]), 1e-300)
            n = np.stack([(rho - R) * x[:, 0] / rho,
                          (rho - R) * x[:, 1] / rho,
                          x[:, 2]], axis=1)
            n /= np.maximum(np.linalg.norm(n, axis=1, keepdims=True), 1e-300)
            return v - (v * n).sum(axis=-1, keepdims=True) * n
        return proj, tang
    return None, (lambda x, v: v)


def _transverse_residual(images: np.ndarray, grads: np.ndarray) -> float:
    """Max norm of the (tangential) gradient transverse to the path tangent."""
    worst = 0.0
    for k in range(1, len(images) - 1):
        tau = images[k + 1] - images[k - 1]
        nt = np.linalg.norm(tau)
        if nt <= 0.0:
            continue
        tau = tau / nt
        g = grads[k]
        worst = max(worst, float(np.linalg.norm(g - (g @ tau) * tau)))
    return worst


def evolve_string(landscape: Landscape, a: np.ndarray, b: np.ndarray,
                  n_images: int = 100, max_steps: int = 50000,
                  tol: float = 1e-9, step: float = 2e-3) -> StringState:
    """Relax a string of images between two minima to the MEP.

    Stops when the per-iteration image displacement falls below tol (the
    discrete fixed point).  The recorded residual is the transverse
    gradient norm, whose floor is set by the image spacing, roughly
    (path length / n_images)^2 in curvature units; it shrinks ~16x when
    n_images quadruples.  The step halves on sustained displacement
    growth (instability) and creeps back when the iteration behaves.
    """
    if landscape.gradient is None:
        raise ValueError("string method needs an analytic gradient")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    proj, tang = _manifold_maps(landscape)
    for name, x in (("a", a), ("b", b)):
        g = landscape.grad(x[None, :])
        gn = float(np.linalg.norm(tang(x[None, :], g)[0]))
        if gn > 1e-4:
            raise ValueError(f"endpoint {name} is not near a minimum (|grad|={gn:.2e})")

    t = np.linspace(0.0, 1.0, n_images)[:, None]
    images = (1.0 - t) * a[None, :] + t * b[None, :]
    if proj is not None:
        images = proj(images)
        images[0], images[-1] = a, b

    h = step
    prev_disp = np.inf
    worse = 0
    for it in range(1, max_steps + 1):
        grads = tang(images, landscape.grad(images))
        new = images.copy()
        new[1:-1] = images[1:-1] - h * grads[1:-1]
        if proj is not None:
            new[1:-1] = proj(new[1:-1])
        new = reparameterize(new)
        if proj is not None:
            new[1:-1] = proj(new[1:-1])
            new[0], new[-1] = a, b
        disp = float(np.max(np.linalg.norm(new - images, axis=1)))
        images = new
        if disp < tol:
            residual = _transverse_residual(images, tang(images, landscape.grad(images)))
            return StringState(images, h, residual, it, True)
        if disp > prev_disp * 1.1:
            worse += 1
            if worse >= 3 and h > 1e-3 * step:
                h *= 0.5
                worse = 0
        else:
            worse = 0
            h = min(step, h * 1.05)
        prev_disp = disp
    residual = _transverse_residual(images, tang(images, landscape.grad(images)))
    return StringState(images, h, residual, max_steps, False)


def string_mep(landscape: Landscape, a: np.ndarray, b: np.ndarray,
               n_images: int = 100, max_steps: int = 50000,
               tol: float = 1e-9, step: float = 2e-3) -> DiscretePath:
    """Minimum energy path between approximate minima a and b."""
    state = evolve_string(landscape, a, b, n_images, max_steps, tol, step)
    if not state.converged:
        raise RuntimeError(
            f"string did not converge in {max_steps} steps "
            f"(residual {state.residual:.3e}, tol {tol})")
    return DiscretePath(np.full(len(state.images), -1, dtype=int), state.images)


def fw_action(path: DiscretePath | np.ndarray, landscape: Landscape,
              resolution: int = 4096) -> float:
    """Escape action of a discretized path: twice the total uphill gain.

    The polyline is resampled densely by arc length before accumulating
    positive energy increments, so refinements of the same geometric curve
    give the same value.
    """
    pts = path.points if isinstance(path, DiscretePath) else np.asarray(path, dtype=float)
    if len(pts) < 2:
        raise ValueError("need at least two path points")
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    S = np.concatenate([[0.0], np.cumsum(seg)])
    if S[-1] <= 0.0:
        return 0.0
    L = np.linspace(0.0, S[-1], resolution + 1)
    j = np.clip(np.searchsorted(S, L, side="right") - 1, 0, len(pts) - 2)
    denom = np.where(S[j + 1] > S[j], S[j + 1] - S[j], 1.0)
    t = ((L - S[j]) / denom)[:, None]
    dense = (1.0 - t) * pts[j] + t * pts[j + 1]
    U = landscape(dense)
    dU = np.diff(U)
    return float(2.0 * dU[dU > 0.0].sum())
