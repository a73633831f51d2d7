"""The four figure kinds regenerated from run outputs.

Every render is deterministic: fixed figure geometry, no timestamps in
the PNG metadata, and inputs taken verbatim from the run files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .reader import RunData, load_run  # noqa: E402

__all__ = ["render", "KINDS"]

KINDS = ("heatmap", "path-overlay", "current-profile", "rate-table")

_SAVE = dict(dpi=110, metadata={"Software": None})


def _new_axes(three_d: bool):
    fig = plt.figure(figsize=(6.0, 4.8))
    if three_d:
        ax = fig.add_subplot(111, projection="3d")
    else:
        ax = fig.add_subplot(111)
    return fig, ax


def _scatter(ax, pts, values, three_d, cmap="viridis", size=4.0):
    if three_d:
        return ax.scatter(pts[:, 0], pts[:, 1], pts[:, 2], c=values,
                          s=size, cmap=cmap, linewidths=0)
    return ax.scatter(pts[:, 0], pts[:, 1], c=values, s=size, cmap=cmap,
                      linewidths=0)


def _project(run: RunData, pts: np.ndarray, three_d: bool) -> np.ndarray:
    return pts if three_d else run.to_plane(pts)


def render_heatmap(run: RunData, out: str, three_d: bool):
    fig, ax = _new_axes(three_d)
    pts = _project(run, run.points, three_d)
    # clip the color range to the landscape's informative band
    vals = np.minimum(run.energies, np.percentile(run.energies, 98))
    sc = _scatter(ax, pts, vals, three_d)
    fig.colorbar(sc, ax=ax, label="U")
    ax.set_title("landscape heat map with samples")
    if not three_d:
        ax.set_xlabel("X")
        ax.set_ylabel("Y")
    fig.savefig(out, **_SAVE)
    plt.close(fig)


def render_path_overlay(run: RunData, out: str, three_d: bool):
    fig, ax = _new_axes(three_d)
    pts = _project(run, run.points, three_d)
    _scatter(ax, pts, run.committor, three_d, cmap="cividis", size=2.5)
    _, dom = run.node_path("dominant_path.csv")
    _, mean = run.node_path("mean_path.csv")
    domp = _project(run, dom, three_d)
    meanp = _project(run, mean, three_d)
    if three_d:
        ax.plot(domp[:, 0], domp[:, 1], domp[:, 2], "o", color="red",
                markersize=4, markerfacecolor="none", label="dominant path")
        ax.plot(meanp[:, 0], meanp[:, 1], meanp[:, 2], "-", color="black",
                linewidth=1.6, label="mean path")
    else:
        ax.plot(domp[:, 0], domp[:, 1], "o", color="red", markersize=4,
                markerfacecolor="none", label="dominant path")
        ax.plot(meanp[:, 0], meanp[:, 1], "-", color="black", linewidth=1.6,
                label="mean path")
    ax.legend(loc="best")
    ax.set_title("dominant (circles) and mean (line) transition paths")
    fig.savefig(out, **_SAVE)
    plt.close(fig)


def render_current_profile(run: RunData, out: str):
    nodes, pts = run.node_path("dominant_path.csv")
    current = run.edges("current.csv")
    arc = np.concatenate([[0.0], np.cumsum(
        np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    xs, ys = [], []
    for k in range(len(nodes) - 1):
        key = (int(nodes[k]), int(nodes[k + 1]))
        if key not in current:
            raise ValueError(f"dominant path edge {key} missing from current.csv")
        xs.append(arc[k])
        ys.append(current[key])
    fig, ax = _new_axes(False)
    ax.plot(xs, np.log10(ys), "o-", markersize=3.5, linewidth=0.9)
    ax.set_xlabel("arc length along dominant path")
    ax.set_ylabel("log10 J")
    ax.set_title("reactive current along the dominant path")
    fig.savefig(out, **_SAVE)
    plt.close(fig)


def render_rate_table(run_dirs, out: str):
    import json
    import os
    rows = []
    for d in run_dirs:
        with open(os.path.join(d, "summary.json")) as fh:
            s = json.load(fh)
        rows.append((s["config"]["eps"], s["eps_ln_rate"]))
    rows.sort(key=lambda r: -r[0])
    fig, ax = _new_axes(False)
    ax.axis("off")
    cells = [[f"{eps:g}", f"{val:.4f}"] for eps, val in rows]
    table = ax.table(cellText=cells, colLabels=["eps", "eps ln k_AB"],
                     loc="center", cellLoc="center")
    table.scale(1.0, 1.4)
    ax.set_title("transition rates")
    fig.savefig(out, **_SAVE)
    plt.close(fig)


def render(run_dirs, kind: str, out: str, projection: str = "plane"):
    """Render one figure kind from one or more run directories."""
    if kind not in KINDS:
        raise ValueError(f"unknown figure kind {kind!r}; choose from {KINDS}")
    if not run_dirs:
        raise ValueError("at least one run directory is required")
    three_d = projection in ("sphere-3d", "torus-3d")
    if kind == "rate-table":
        render_rate_table(list(run_dirs), out)
        return out
    run = load_run(run_dirs[0])
    if kind == "heatmap":
        render_heatmap(run, out, three_d)
    elif kind == "path-overlay":
        render_path_overlay(run, out, three_d)
    else:
        render_current_profile(run, out)
    return out
