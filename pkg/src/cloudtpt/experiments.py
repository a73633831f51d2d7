"""Experiment drivers: full pipelines from sampling to mean paths.

A run executes sample/ingest -> tessellate -> weights -> generator ->
committor -> reactive statistics -> controlled chain -> controlled walk ->
mean path (-> reference MEP on analytic landscapes) and writes every
stage product into one output directory with fixed file names.
"""

from __future__ import annotations

import dataclasses
import os
import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import fileio
from .committor import solve_committor
from .control import build_controlled_chain, effective_potential_field
from .generator import build_generator, jump_chain
from .meanpath import (default_ball_radius, init_path, iterate_mean_path,
                       tune_ball_radius)
from .pointcloud import PointCloud, build_tessellation, sample_sphere_uniform, \
    sample_torus_uniform
from .potentials import (Landscape, find_stationary_points, grid_landscape,
                         mueller_landscape, mueller_perturbed_landscape,
                         pullback_sphere, pullback_torus, shifted_weights,
                         sphere_lift, torus_angles, torus_embed)
from .reference import fw_action, string_mep
from .sampler import run_controlled_walk, run_uncontrolled_walk
from .tpt import (current_profile, dominant_path, reactive_current,
                  reactive_density, transition_rate)

__all__ = ["ExperimentConfig", "DihedralSeries", "run_experiment",
           "ingest_alanine", "enrich_transition_region", "sparsify",
           "mueller_stationary", "select_ball", "ENERGY_CAP_MULT"]

# energies are capped at min(U) + ENERGY_CAP_MULT * eps, flooring the weights
# at exp(-240) ~ 1e-105.  Capped states carry no measurable current; the floor
# leaves headroom so that even q^2 * pi products stay in the normal range of
# double precision on the controlled workloads
ENERGY_CAP_MULT = 240.0


@dataclass
class ExperimentConfig:
    experiment: str = "sphere-mueller"   # sphere-mueller | torus-perturbed | alanine | custom
    n_samples: int = 4000
    eps: float = 0.1
    ab_radius: float = 0.05
    K_max: int = 100000
    M: int = 100
    L_max: int = 20
    r0: float = 0.0                      # 0 means auto (tuned from the cloud)
    k: int = 20
    seed: int = 0
    tol: float = 1e-10
    torus_R: float = 2.0
    torus_r: float = 1.0
    angle_uniform: bool = False
    dihedral_file: str = ""
    energy_grid_file: str = ""
    batch: int = 4000
    n_aux: int = 500
    window: int = 10
    a_phi: float = np.nan                # alanine A/B centers, (phi, psi) radians
    a_psi: float = np.nan
    b_phi: float = np.nan
    b_psi: float = np.nan
    cloud_file: str = ""
    out_dir: str = "run"

    def validate(self):
        if self.experiment not in ("sphere-mueller", "torus-perturbed",
                                   "alanine", "custom"):
            raise ValueError(f"unknown experiment {self.experiment!r}")
        for key in ("n_samples", "K_max", "M", "L_max", "k"):
            if getattr(self, key) <= 0:
                raise ValueError(f"{key} must be positive")
        if not self.eps > 0:
            raise ValueError("eps must be positive (set it explicitly; "
                             "there is no default for alanine)")
        if self.experiment == "alanine":
            if not self.dihedral_file or not self.energy_grid_file:
                raise ValueError("alanine needs dihedral_file and energy_grid_file")
            for key in ("a_phi", "a_psi", "b_phi", "b_psi"):
                if np.isnan(getattr(self, key)):
                    raise ValueError(f"alanine needs {key} (A/B well centers)")
        return self

    @classmethod
    def from_file(cls, path: str, **overrides):
        """Flat key=value config file; later command-line overrides win."""
        cfg = {}
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key=value")
                key, val = (s.strip() for s in line.split("=", 1))
                cfg[key] = val
        cfg.update({k: v for k, v in overrides.items() if v is not None})
        fields = {f.name: f.type for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, val in cfg.items():
            if key not in fields:
                raise ValueError(f"unknown config key {key!r}")
            current = getattr(cls(), key)
            if isinstance(current, bool):
                kwargs[key] = val if isinstance(val, bool) else val.lower() in ("1", "true", "yes")
            elif isinstance(current, int):
                kwargs[key] = int(val)
            elif isinstance(current, float):
                kwargs[key] = float(val)
            else:
                kwargs[key] = val
        return cls(**kwargs)


@dataclass(frozen=True)
class DihedralSeries:
    """Equidistant time series of backbone dihedral angles, wrapped to [-pi, pi)."""

    t: np.ndarray
    phi: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if len(t) < 2:
            raise ValueError("series needs at least two samples")
        dt = np.diff(t)
        if np.any(dt <= 0):
            raise ValueError("time stamps must increase")
        if np.max(np.abs(dt - dt[0])) > 1e-9 * abs(dt[0]):
            raise ValueError("time stamps must be equidistant")
        wrap = lambda a: np.mod(np.asarray(a, dtype=float) + np.pi, 2 * np.pi) - np.pi
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "phi", wrap(self.phi))
        object.__setattr__(self, "psi", wrap(self.psi))

    def __len__(self):
        return len(self.t)


@lru_cache(maxsize=4)
def mueller_stationary(perturbed: bool = False):
    """Stationary points of the plane landscape, sorted minima then saddles.

    Computed by the multi-start Newton oracle rather than hardcoded; the
    landscape has 3 minima and 2 saddles in the box of interest.
    """
    land = mueller_perturbed_landscape() if perturbed else mueller_landscape()
    xs = np.linspace(-1.5, 1.2, 14)
    ys = np.linspace(-0.2, 2.0, 14)
    starts = [np.array([x, y]) for x in xs for y in ys]
    pts = find_stationary_points(land, starts)
    box = [s for s in pts if -1.5 <= s.location[0] <= 1.2 and -0.2 <= s.location[1] <= 2.0]
    minima = sorted((s for s in box if s.kind == "minimum"), key=lambda s: s.energy)
    saddles = sorted((s for s in box if s.kind == "saddle"), key=lambda s: s.energy)
    return minima, saddles


def mueller_transition_endpoints():
    """(X1, X3): the deep well and the well across both saddles.

    X1 is the global minimum; X3 the far minimum (largest plane distance
    from X1), so the transition traverses the intermediate well X2.
    """
    minima, _ = mueller_stationary()
    x1 = minima[0].location
    x3 = max(minima[1:], key=lambda s: np.linalg.norm(s.location - x1)).location
    return x1, x3


def select_ball(points: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    """Cloud indices within the ambient ball; falls back to the nearest point.

    The nearest-point fallback keeps A/B nonempty on sparse clouds where
    the ball may contain no sample.
    """
    d = np.linalg.norm(points - center[None, :], axis=1)
    idx = np.where(d < radius)[0]
    if len(idx) == 0:
        idx = np.array([int(np.argmin(d))])
    rep = idx[np.argmin(d[idx])]
    return np.concatenate([[rep], idx[idx != rep]])


def sparsify(series: DihedralSeries, batch: int, seed: int) -> np.ndarray:
    """Uniform random subset without replacement: (batch, 2) angle pairs.

    Rows keep time order; the subset is of samples, so the equidistant
    time structure of the parent series does not carry over.
    """
    if batch > len(series):
        raise ValueError(f"batch {batch} exceeds series length {len(series)}")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(series), size=batch, replace=False))
    return np.stack([series.phi[idx], series.psi[idx]], axis=1)


def enrich_transition_region(series: DihedralSeries, window: int = 10,
                             n_aux: int = 500, seed: int = 0,
                             r: float = 1.0):
    """Auxiliary samples bridging the sparsely visited transition band.

    Crossing indices are the j with z_j > 0 and z_{j+1} < 0 for z = r sin(phi);
    the window samples before (D+) and after (D-) each crossing are mixed by
    independent uniform convex combinations per angle component.
    """
    if len(series) == 0:
        raise ValueError("empty series")
    z = r * np.sin(series.phi)
    cross = np.where((z[:-1] > 0.0) & (z[1:] < 0.0))[0]
    if len(cross) == 0:
        raise ValueError("no transition crossings in the series; nothing to enrich")
    n = len(series)
    d_plus, d_minus = [], []
    for j in cross:
        lo = max(0, j - window)
        hi = min(n - 1, j + window)
        d_plus.extend(zip(series.phi[lo:j + 1], series.psi[lo:j + 1]))
        d_minus.extend(zip(series.phi[j:hi + 1], series.psi[j:hi + 1]))
    d_plus = np.asarray(d_plus)
    d_minus = np.asarray(d_minus)
    rng = np.random.default_rng(seed)
    ip = rng.integers(0, len(d_plus), size=n_aux)
    im = rng.integers(0, len(d_minus), size=n_aux)
    b1 = rng.uniform(0.0, 1.0, size=n_aux)
    b2 = rng.uniform(0.0, 1.0, size=n_aux)
    phi = b1 * d_plus[ip, 0] + (1.0 - b1) * d_minus[im, 0]
    psi = b2 * d_plus[ip, 1] + (1.0 - b2) * d_minus[im, 1]
    return np.stack([phi, psi], axis=1)


def ingest_alanine(dihedral_file: str, energy_grid_file: str,
                   R: float = 2.0, r: float = 1.0):
    """Embed a dihedral series on the torus and load its free-energy grid.

    Duplicate (phi, psi) rows collapse to one embedded point.  Returns
    (cloud, landscape, series).
    """
    t, phi, psi = fileio.load_dihedral_series(dihedral_file)
    series = DihedralSeries(t, phi, psi)
    pg, sg, Ug = fileio.load_energy_grid(energy_grid_file)
    land = grid_landscape(pg, sg, Ug, R, r)
    pts = torus_embed(series.phi, series.psi, R, r)
    pts = np.unique(np.round(pts, 12), axis=0)
    return PointCloud(pts, intrinsic_dim=2), land, series


def _capped_energies(land: Landscape, points: np.ndarray, eps: float):
    U = land(points)
    finite = np.isfinite(U)
    if not finite.any():
        raise ValueError("landscape is non-finite at every sample")
    cap = float(U[finite].min()) + ENERGY_CAP_MULT * eps
    n_capped = int(np.sum(~finite | (U > cap)))
    return np.minimum(np.where(finite, U, np.inf), cap), n_capped


def _build_problem(cfg: ExperimentConfig):
    """Cloud, landscape and A/B centers for the configured experiment."""
    if cfg.experiment == "sphere-mueller":
        cloud = sample_sphere_uniform(cfg.n_samples, cfg.seed)
        land = pullback_sphere(mueller_landscape())
        x1, x3 = mueller_transition_endpoints()
        a_c, b_c = sphere_lift(x1)[0], sphere_lift(x3)[0]
        plane = mueller_landscape()
        mep_ab = (x1, x3)
        return cloud, land, a_c, b_c, plane, mep_ab
    if cfg.experiment == "torus-perturbed":
        R, r = cfg.torus_R, cfg.torus_r
        cloud = sample_torus_uniform(cfg.n_samples, R, r, cfg.seed,
                                     angle_uniform=cfg.angle_uniform)
        land = pullback_torus(mueller_perturbed_landscape(), R, r)
        x1, x3 = mueller_transition_endpoints()
        a_c = torus_embed(x1[0] / r, x1[1] / R, R, r)
        b_c = torus_embed(x3[0] / r, x3[1] / R, R, r)
        return cloud, land, a_c, b_c, None, None
    if cfg.experiment == "alanine":
        cloud, land, series = ingest_alanine(cfg.dihedral_file, cfg.energy_grid_file,
                                             cfg.torus_R, cfg.torus_r)
        sub = sparsify(series, min(cfg.batch, len(series)), cfg.seed)
        aux = enrich_transition_region(series, cfg.window, cfg.n_aux,
                                       cfg.seed + 1, cfg.torus_r)
        pts = np.vstack([
            torus_embed(sub[:, 0], sub[:, 1], cfg.torus_R, cfg.torus_r),
            torus_embed(aux[:, 0], aux[:, 1], cfg.torus_R, cfg.torus_r),
        ])
        pts = np.unique(np.round(pts, 12), axis=0)
        cloud = PointCloud(pts, intrinsic_dim=2)
        a_c = torus_embed(cfg.a_phi, cfg.a_psi, cfg.torus_R, cfg.torus_r)
        b_c = torus_embed(cfg.b_phi, cfg.b_psi, cfg.torus_R, cfg.torus_r)
        return cloud, land, a_c, b_c, None, None
    raise ValueError(f"experiment {cfg.experiment!r} needs explicit inputs")


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Execute the full pipeline and write the artifact bundle.

    Returns the summary dict (also written to summary.json in out_dir).
    """
    cfg.validate()
    t_start = time.time()
    out = fileio.ensure_dir(cfg.out_dir)
    summary = {"config": {f.name: getattr(cfg, f.name)
                          for f in dataclasses.fields(cfg)}}

    def stage(name):
        summary.setdefault("stages", []).append(name)

    try:
        cloud, land, a_c, b_c, plane_land, mep_ab = _build_problem(cfg)
        stage("build")
        fileio.save_cloud(cloud, os.path.join(out, "cloud.csv"))

        tess = build_tessellation(cloud, k=cfg.k)
        stage("tessellate")
        fileio.save_tessellation(tess, os.path.join(out, "tess.json"))
        summary["n_points"] = cloud.n
        summary["clipped_cells"] = int(tess.clipped.sum())

        U, n_capped = _capped_energies(land, cloud.points, cfg.eps)
        pi, shift = shifted_weights(U, cfg.eps)
        stage("weights")
        summary["energy_shift"] = shift
        summary["capped_states"] = n_capped
        fileio.save_field(np.arange(cloud.n), U, os.path.join(out, "energies.csv"),
                          name="U")

        Q = build_generator(tess, pi, cloud)
        stage("generator")
        fileio.save_generator(Q, os.path.join(out, "generator.csv"),
                              os.path.join(out, "measures.csv"))

        A = select_ball(cloud.points, np.atleast_1d(a_c).ravel(), cfg.ab_radius)
        B = select_ball(cloud.points, np.atleast_1d(b_c).ravel(), cfg.ab_radius)
        summary["A_size"] = int(len(A))
        summary["B_size"] = int(len(B))

        field = solve_committor(Q, A, B, tol=cfg.tol)
        stage("committor")
        summary["committor_solver"] = field.solver
        summary["committor_residual"] = field.residual
        fileio.save_field(np.arange(cloud.n), field.q,
                          os.path.join(out, "committor.csv"))

        graph = reactive_current(Q, pi, field)
        stage("current")
        fileio.save_edges(graph.edges(), os.path.join(out, "current.csv"))
        k_signed = transition_rate(graph)
        in_A = set(int(a) for a in A)
        k_positive = float(sum(w for i, _, w in graph.edges() if i in in_A))
        rho = reactive_density(pi, field.q)
        summary["rate"] = k_signed
        summary["rate_positive_part"] = k_positive
        summary["rate_signed_vs_positive_diff"] = k_positive - k_signed
        summary["eps_ln_rate"] = float(cfg.eps * np.log(k_signed) - shift)
        summary["reactive_density_max"] = float(rho.max())

        dpath = dominant_path(graph, cloud_points=cloud.points)
        stage("dominant-path")
        fileio.save_path(dpath.nodes, dpath.points, field.q[dpath.nodes],
                         os.path.join(out, "dominant_path.csv"))
        prof = current_profile(dpath, graph)
        summary["bottleneck_current"] = float(min(w for _, w in prof))

        chain = build_controlled_chain(Q, field, pi, tess.volumes, A, cfg.eps)
        stage("control")
        with open(os.path.join(out, "exit.csv"), "w") as fh:
            fh.write("j,prob\n")
            for j, p in zip(chain.exit_states, chain.exit_probs):
                fh.write(f"{int(j)},{p!r}\n")
        u_eff = effective_potential_field(U, field.q, cfg.eps)
        fileio.save_field(np.arange(cloud.n), u_eff,
                          os.path.join(out, "effective_potential.csv"), name="Ue")

        walk = run_controlled_walk(chain, B, cfg.K_max, cfg.seed + 1000)
        stage("walk")
        fileio.save_trajectory(walk, os.path.join(out, "trajectory.csv"))
        fileio.save_segments(walk.segments, os.path.join(out, "segments.csv"))
        summary["controlled_segments"] = len(walk.segments)

        baseline = run_uncontrolled_walk(jump_chain(Q), A, B, cfg.K_max,
                                         cfg.seed + 2000)
        stage("baseline-walk")
        summary["uncontrolled_transitions"] = len(baseline.segments)

        mp_state = init_path(cloud.points[A[0]], cloud.points[B[0]], cfg.M,
                             walk, cloud)
        r0 = cfg.r0 if cfg.r0 > 0 else tune_ball_radius(
            walk, cloud, mp_state, default_ball_radius(cloud))
        mp_state = dataclasses.replace(mp_state, r0=r0)
        history = []
        mp = iterate_mean_path(walk, cloud, mp_state, cfg.L_max, history=history)
        stage("mean-path")
        summary["r0"] = r0
        summary["mean_path_converged"] = bool(mp.converged)
        summary["mean_path_iterations"] = int(mp.iteration)
        fileio.save_path(mp.indices, mp.points, None,
                         os.path.join(out, "mean_path.csv"))
        with open(os.path.join(out, "meanpath_diag.csv"), "w") as fh:
            fh.write("iter,max_displacement,empty_balls\n")
            for it, disp, empty in history:
                fh.write(f"{it},{disp!r},{empty}\n")

        if plane_land is not None and mep_ab is not None:
            mep = string_mep(land, sphere_lift(mep_ab[0])[0],
                             sphere_lift(mep_ab[1])[0])
            stage("mep")
            fileio.save_mep(mep.points, land(mep.points),
                            os.path.join(out, "mep.csv"))
            summary["fw_action"] = fw_action(mep, land)

        summary["runtime_s"] = time.time() - t_start
        fileio.save_summary(summary, os.path.join(out, "summary.json"))
        return summary
    except Exception as exc:
        last = summary.get("stages", ["init"])[-1]
        raise RuntimeError(f"experiment failed after stage {last!r}: {exc}") from exc
