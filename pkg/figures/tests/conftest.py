"""Run-directory fixtures: a real pipeline run when the primary package is
installed, otherwise a schema-faithful synthetic stand-in."""

import json
import os

import numpy as np
import pytest


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def _synthetic_run(root: str, eps: float, seed: int = 0) -> str:
    """Minimal sphere-run layout with consistent schema and values."""
    rng = np.random.default_rng(seed)
    n = 120
    pts = rng.normal(size=(n, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    pts[:, 2] = np.minimum(pts[:, 2], 0.9)
    q = np.clip((pts[:, 0] + 1.0) / 2.0, 0.0, 1.0)
    U = np.cos(3.0 * pts[:, 1]) + pts[:, 0]

    _write(os.path.join(root, "cloud.csv"),
           "id,x1,x2,x3\n" + "".join(
               f"{i},{p[0]!r},{p[1]!r},{p[2]!r}\n" for i, p in enumerate(pts)))
    _write(os.path.join(root, "committor.csv"),
           "id,q\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(q)))
    _write(os.path.join(root, "energies.csv"),
           "id,U\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(U)))

    order = np.argsort(q)
    path_nodes = order[:: max(1, n // 10)][:8]
    J = rng.uniform(1e-6, 1e-3, size=len(path_nodes) - 1)
    edge_lines = [f"{int(path_nodes[k])},{int(path_nodes[k+1])},{J[k]!r}\n"
                  for k in range(len(path_nodes) - 1)]
    extra = [f"{int(a)},{int(b)},{rng.uniform(1e-7, 1e-4)!r}\n"
             for a, b in rng.integers(0, n, size=(30, 2)) if a != b]
    _write(os.path.join(root, "current.csv"), "i,j,J\n" + "".join(edge_lines + extra))

    def path_csv(nodes):
        lines = ["order,id,x1,x2,x3,q\n"]
        for k, i in enumerate(nodes):
            p = pts[i]
            lines.append(f"{k},{int(i)},{p[0]!r},{p[1]!r},{p[2]!r},{q[i]!r}\n")
        return "".join(lines)

    _write(os.path.join(root, "dominant_path.csv"), path_csv(path_nodes))
    _write(os.path.join(root, "mean_path.csv"), path_csv(path_nodes[::-1]))
    summary = {"config": {"experiment": "sphere-mueller", "eps": eps,
                          "seed": seed, "torus_R": 2.0, "torus_r": 1.0},
               "eps_ln_rate": float(eps * np.log(rng.uniform(0.5, 2.0))),
               "rate": 1.0}
    _write(os.path.join(root, "summary.json"), json.dumps(summary, indent=2))
    return root


@pytest.fixture(scope="session")
def sphere_run(tmp_path_factory) -> str:
    """A completed sphere run: real pipeline if cloudtpt is available."""
    root = tmp_path_factory.mktemp("run")
    try:
        from cloudtpt.experiments import ExperimentConfig, run_experiment
    except ImportError:
        return _synthetic_run(str(root), eps=0.1)
    cfg = ExperimentConfig(experiment="sphere-mueller", n_samples=900,
                           eps=0.1, seed=1, K_max=8000, M=40, L_max=15,
                           out_dir=str(root))
    run_experiment(cfg)
    return str(root)


@pytest.fixture(scope="session")
def four_eps_runs(tmp_path_factory):
    """Four summary-bearing run dirs at different eps for the rate table."""
    dirs = []
    for k, eps in enumerate([1.0, 0.2, 0.05, 0.02]):
        d = tmp_path_factory.mktemp(f"eps{k}")
        _synthetic_run(str(d), eps=eps, seed=k)
        dirs.append(str(d))
    return dirs
