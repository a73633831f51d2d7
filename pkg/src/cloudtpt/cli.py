"""Command-line surface: stage subcommands plus the experiment driver."""

from __future__ import annotations

import dataclasses
import os
import sys

import click
import numpy as np

from . import fileio
from .committor import solve_committor
from .control import build_controlled_chain
from .experiments import (ExperimentConfig, mueller_transition_endpoints,
                          run_experiment, select_ball)
from .generator import build_generator, jump_chain
from .meanpath import (default_ball_radius, init_path, iterate_mean_path,
                       tune_ball_radius)
from .pointcloud import build_tessellation, sample_sphere_uniform, \
    sample_torus_uniform
from .potentials import (mueller_landscape, pullback_sphere, shifted_weights,
                         sphere_lift)
from .reference import fw_action, string_mep
from .sampler import run_controlled_walk
from .tpt import dominant_path, reactive_current, transition_rate

CONFIG_KEYS = [f.name for f in dataclasses.fields(ExperimentConfig)]


@click.group()
def main():
    """Transition path analysis on point clouds."""


def _fail(stage: str, exc: Exception):
    click.echo(f"error[{stage}]: {exc}", err=True)
    sys.exit(1)


@main.command()
@click.option("--manifold", type=click.Choice(["sphere", "torus"]), default="sphere")
@click.option("--n", default=4000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--torus-R", "torus_R", default=2.0, show_default=True)
@click.option("--torus-r", "torus_r", default=1.0, show_default=True)
@click.option("--angle-uniform", is_flag=True, default=False,
              help="Torus only: uniform in angles instead of area.")
@click.option("--out", required=True, type=click.Path())
def sample(manifold, n, seed, torus_R, torus_r, angle_uniform, out):
    """Sample a point cloud on a manifold and write it as CSV."""
    try:
        if manifold == "sphere":
            cloud = sample_sphere_uniform(n, seed)
        else:
            cloud = sample_torus_uniform(n, torus_R, torus_r, seed, angle_uniform)
        fileio.save_cloud(cloud, out)
        click.echo(f"wrote {cloud.n} points to {out}")
    except Exception as exc:
        _fail("sample", exc)


@main.command()
@click.option("--cloud", "cloud_file", required=True, type=click.Path(exists=True))
@click.option("--k", default=20, show_default=True)
@click.option("--out", required=True, type=click.Path())
def tessellate(cloud_file, k, out):
    """Build the approximate Voronoi tessellation of a cloud file."""
    try:
        cloud = fileio.load_cloud(cloud_file)
        tess = build_tessellation(cloud, k=k)
        fileio.save_tessellation(tess, out)
        click.echo(f"wrote {len(tess.face_index)} faces, "
                   f"{int(tess.clipped.sum())} clipped cells to {out}")
    except Exception as exc:
        _fail("tessellate", exc)


def _load_stage_inputs(cloud_file, tess_file, energies_file, eps):
    cloud = fileio.load_cloud(cloud_file)
    tess = fileio.load_tessellation(tess_file)
    _, U = fileio.load_field(energies_file)
    pi, shift = shifted_weights(U, eps)
    Q = build_generator(tess, pi, cloud)
    return cloud, tess, U, pi, shift, Q


_stage_opts = [
    click.option("--cloud", "cloud_file", required=True, type=click.Path(exists=True)),
    click.option("--tess", "tess_file", required=True, type=click.Path(exists=True)),
    click.option("--energies", "energies_file", required=True,
                 type=click.Path(exists=True)),
    click.option("--eps", required=True, type=float),
    click.option("--a-index", "a_idx", multiple=True, type=int,
                 help="State indices of A (repeatable)."),
    click.option("--b-index", "b_idx", multiple=True, type=int,
                 help="State indices of B (repeatable)."),
]


def stage_options(fn):
    for opt in reversed(_stage_opts):
        fn = opt(fn)
    return fn


@main.command()
@stage_options
@click.option("--tol", default=1e-10, show_default=True)
@click.option("--out", required=True, type=click.Path())
def committor(cloud_file, tess_file, energies_file, eps, a_idx, b_idx, tol, out):
    """Solve the committor between explicit A and B index sets."""
    try:
        cloud, tess, U, pi, shift, Q = _load_stage_inputs(
            cloud_file, tess_file, energies_file, eps)
        field = solve_committor(Q, list(a_idx), list(b_idx), tol=tol)
        fileio.save_field(np.arange(cloud.n), field.q, out)
        click.echo(f"solver={field.solver} residual={field.residual:.3e}")
    except Exception as exc:
        _fail("committor", exc)


@main.command()
@stage_options
@click.option("--committor", "committor_file", required=True,
              type=click.Path(exists=True))
@click.option("--current-out", required=True, type=click.Path())
@click.option("--path-out", required=True, type=click.Path())
def tpt(cloud_file, tess_file, energies_file, eps, a_idx, b_idx,
        committor_file, current_out, path_out):
    """Reactive current, rate and dominant path from a solved committor."""
    try:
        from .committor import CommittorField
        cloud, tess, U, pi, shift, Q = _load_stage_inputs(
            cloud_file, tess_file, energies_file, eps)
        _, q = fileio.load_field(committor_file)
        field = CommittorField(q, np.asarray(a_idx, int), np.asarray(b_idx, int), 0.0)
        graph = reactive_current(Q, pi, field)
        fileio.save_edges(graph.edges(), current_out)
        dpath = dominant_path(graph, cloud_points=cloud.points)
        fileio.save_path(dpath.nodes, dpath.points, q[dpath.nodes], path_out)
        k = transition_rate(graph)
        click.echo(f"rate={k!r} eps_ln_rate={eps * np.log(k) - shift!r}")
    except Exception as exc:
        _fail("tpt", exc)


@main.command()
@stage_options
@click.option("--committor", "committor_file", required=True,
              type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
def control(cloud_file, tess_file, energies_file, eps, a_idx, b_idx,
            committor_file, out_dir):
    """Export the controlled chain (rates, measures, exit distribution)."""
    try:
        from .committor import CommittorField
        cloud, tess, U, pi, shift, Q = _load_stage_inputs(
            cloud_file, tess_file, energies_file, eps)
        _, q = fileio.load_field(committor_file)
        field = CommittorField(q, np.asarray(a_idx, int), np.asarray(b_idx, int), 0.0)
        chain = build_controlled_chain(Q, field, pi, tess.volumes, list(a_idx), eps)
        fileio.ensure_dir(out_dir)
        coo = chain.rates.tocoo()
        fileio.save_edges(
            ((int(chain.states[i]), int(chain.states[j]), w)
             for i, j, w in zip(coo.row, coo.col, coo.data)),
            os.path.join(out_dir, "controlled_rates.csv"), header="i,j,rate")
        with open(os.path.join(out_dir, "measures.csv"), "w") as fh:
            fh.write("i,pi,vol\n")
            for s, p, v in zip(chain.states, chain.pi_eff, chain.volumes):
                fh.write(f"{int(s)},{p!r},{v!r}\n")
        with open(os.path.join(out_dir, "exit.csv"), "w") as fh:
            fh.write("j,prob\n")
            for j, p in zip(chain.exit_states, chain.exit_probs):
                fh.write(f"{int(j)},{p!r}\n")
        click.echo(f"controlled chain on {chain.n} states written to {out_dir}")
    except Exception as exc:
        _fail("control", exc)


@main.command()
@stage_options
@click.option("--committor", "committor_file", required=True,
              type=click.Path(exists=True))
@click.option("--k-max", default=100000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--segments-out", required=True, type=click.Path())
def walk(cloud_file, tess_file, energies_file, eps, a_idx, b_idx,
         committor_file, k_max, seed, out, segments_out):
    """Run the controlled random walk and record transition segments."""
    try:
        from .committor import CommittorField
        cloud, tess, U, pi, shift, Q = _load_stage_inputs(
            cloud_file, tess_file, energies_file, eps)
        _, q = fileio.load_field(committor_file)
        field = CommittorField(q, np.asarray(a_idx, int), np.asarray(b_idx, int), 0.0)
        chain = build_controlled_chain(Q, field, pi, tess.volumes, list(a_idx), eps)
        rec = run_controlled_walk(chain, list(b_idx), k_max, seed)
        fileio.save_trajectory(rec, out)
        fileio.save_segments(rec.segments, segments_out)
        click.echo(f"{len(rec.segments)} transition segments in {k_max} steps")
    except Exception as exc:
        _fail("walk", exc)


@main.command()
@click.option("--cloud", "cloud_file", required=True, type=click.Path(exists=True))
@click.option("--trajectory", "traj_file", required=True, type=click.Path(exists=True))
@click.option("--a-index", type=int, required=True)
@click.option("--b-index", type=int, required=True)
@click.option("--m", "M", default=100, show_default=True)
@click.option("--l-max", "L_max", default=20, show_default=True)
@click.option("--r0", default=0.0, show_default=True, help="0 = auto")
@click.option("--out", required=True, type=click.Path())
def meanpath(cloud_file, traj_file, a_index, b_index, M, L_max, r0, out):
    """Average the controlled walk into a mean transition path."""
    try:
        from .sampler import TrajectoryRecord
        cloud = fileio.load_cloud(cloud_file)
        states, dts = fileio.load_trajectory(traj_file)
        rec = TrajectoryRecord(states, dts, [], 0)
        state = init_path(cloud.points[a_index], cloud.points[b_index], M, rec, cloud)
        if r0 <= 0:
            r0 = tune_ball_radius(rec, cloud, state, default_ball_radius(cloud))
        state = dataclasses.replace(state, r0=r0)
        final = iterate_mean_path(rec, cloud, state, L_max)
        fileio.save_path(final.indices, final.points, None, out)
        click.echo(f"converged={final.converged} iters={final.iteration} r0={r0!r}")
    except Exception as exc:
        _fail("meanpath", exc)


@main.command()
@click.option("--n-images", default=100, show_default=True)
@click.option("--manifold", type=click.Choice(["plane", "sphere"]), default="sphere")
@click.option("--out", required=True, type=click.Path())
def mep(n_images, manifold, out):
    """String-method minimum energy path between the two transition wells."""
    try:
        x1, x3 = mueller_transition_endpoints()
        if manifold == "sphere":
            land = pullback_sphere(mueller_landscape())
            a, b = sphere_lift(x1)[0], sphere_lift(x3)[0]
        else:
            land = mueller_landscape()
            a, b = x1, x3
        path = string_mep(land, a, b, n_images=n_images)
        fileio.save_mep(path.points, land(path.points), out)
        click.echo(f"action={fw_action(path, land)!r}")
    except Exception as exc:
        _fail("mep", exc)


@main.command()
@click.option("--config", "config_file", type=click.Path(exists=True),
              help="key=value file; flags below override it.")
@click.option("--set", "overrides", multiple=True,
              help="Override any config key, e.g. --set eps=0.05.")
@click.option("--experiment", type=str, default=None)
@click.option("--eps", type=float, default=None)
@click.option("--n-samples", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out-dir", type=str, default=None)
def experiment(config_file, overrides, experiment, eps, n_samples, seed, out_dir):
    """Run a full experiment pipeline into one output directory."""
    try:
        kv = {}
        for item in overrides:
            if "=" not in item:
                raise ValueError(f"--set expects key=value, got {item!r}")
            key, val = item.split("=", 1)
            kv[key.strip()] = val.strip()
        direct = {"experiment": experiment, "eps": eps, "n_samples": n_samples,
                  "seed": seed, "out_dir": out_dir}
        kv.update({k: v for k, v in direct.items() if v is not None})
        if config_file:
            cfg = ExperimentConfig.from_file(config_file, **kv)
        else:
            base = ExperimentConfig()
            fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
            args = {}
            for key, val in kv.items():
                if key not in fields:
                    raise ValueError(f"unknown config key {key!r}")
                cur = getattr(base, key)
                if isinstance(cur, bool):
                    args[key] = val if isinstance(val, bool) else str(val).lower() in ("1", "true", "yes")
                elif isinstance(cur, int) and not isinstance(val, bool):
                    args[key] = int(val)
                elif isinstance(cur, float):
                    args[key] = float(val)
                else:
                    args[key] = val
            cfg = ExperimentConfig(**args)
        summary = run_experiment(cfg)
        click.echo(f"summary written to {os.path.join(cfg.out_dir, 'summary.json')}")
        if "eps_ln_rate" in summary:
            click.echo(f"eps_ln_rate={summary['eps_ln_rate']!r}")
    except Exception as exc:
        _fail("experiment", exc)


if __name__ == "__main__":
    main()
