"""File formats for clouds, tessellations and pipeline stage outputs.

All files are plain text: clouds and per-state fields are CSV with a
header row, the tessellation is a JSON document with a volumes array and
(i, j, area) face triples, and run summaries are JSON.  Floats are
written with repr-style shortest round-trip formatting so that identical
inputs produce byte-identical files.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .pointcloud import PointCloud, Tessellation

__all__ = [
    "save_cloud", "load_cloud", "save_tessellation", "load_tessellation",
    "save_field", "load_field", "save_edges", "load_edges",
    "save_path", "load_path", "save_trajectory", "load_trajectory",
    "save_segments", "save_mep", "save_summary", "load_summary",
    "save_dihedral_series", "load_dihedral_series",
    "save_energy_grid", "load_energy_grid", "ensure_dir",
    "save_generator", "load_generator",
]


def _fmt(x: float) -> str:
    return repr(float(x))


def save_cloud(cloud: PointCloud, path: str):
    dim = cloud.ambient_dim
    header = "id," + ",".join(f"x{k + 1}" for k in range(dim))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for i, p in enumerate(cloud.points):
            fh.write(f"{i}," + ",".join(_fmt(v) for v in p) + "\n")


def load_cloud(path: str, intrinsic_dim: int = 2) -> PointCloud:
    with open(path) as fh:
        header = fh.readline().strip()
        cols = header.split(",")
        if cols[0] != "id" or len(cols) < 2:
            raise ValueError(f"{path}: bad cloud header {header!r}")
        dim = len(cols) - 1
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != dim + 1:
                raise ValueError(
                    f"{path}:{lineno}: expected {dim + 1} columns, got {len(parts)}")
            try:
                vals = [float(v) for v in parts[1:]]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if not all(np.isfinite(v) for v in vals):
                raise ValueError(f"{path}:{lineno}: non-finite coordinate")
            rows.append(vals)
    return PointCloud(np.asarray(rows), intrinsic_dim=intrinsic_dim)


def save_tessellation(tess: Tessellation, path: str):
    doc = {
        "volumes": [float(v) for v in tess.volumes],
        "faces": [[int(i), int(j), float(a)]
                  for (i, j), a in sorted(tess.face_index.items())],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_tessellation(path: str) -> Tessellation:
    with open(path) as fh:
        doc = json.load(fh)
    volumes = np.asarray(doc["volumes"], dtype=float)
    n = len(volumes)
    faces = {}
    neighbors = [[] for _ in range(n)]
    for i, j, a in doc["faces"]:
        i, j = int(i), int(j)
        if not (0 <= i < j < n):
            raise ValueError(f"{path}: bad face ({i}, {j})")
        faces[(i, j)] = float(a)
        neighbors[i].append(j)
        neighbors[j].append(i)
    neighbors = [np.array(sorted(v), dtype=int) for v in neighbors]
    return Tessellation(volumes, faces, neighbors, np.zeros(n, dtype=bool))


def save_field(ids: np.ndarray, values: np.ndarray, path: str, name: str = "q"):
    with open(path, "w") as fh:
        fh.write(f"id,{name}\n")
        for i, v in zip(ids, values):
            fh.write(f"{int(i)},{_fmt(v)}\n")


def load_field(path: str):
    ids, vals = [], []
    with open(path) as fh:
        fh.readline()
        for line in fh:
            line = line.strip()
            if not line:
                continue
            i, v = line.split(",")
            ids.append(int(i))
            vals.append(float(v))
    return np.asarray(ids, dtype=int), np.asarray(vals)


def save_edges(edges, path: str, header: str = "i,j,J"):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for i, j, w in edges:
            fh.write(f"{int(i)},{int(j)},{_fmt(w)}\n")


def load_edges(path: str):
    out = []
    with open(path) as fh:
        fh.readline()
        for line in fh:
            line = line.strip()
            if not line:
                continue
            i, j, w = line.split(",")
            out.append((int(i), int(j), float(w)))
    return out


def save_path(nodes, points, q, path: str):
    dim = points.shape[1]
    cols = ",".join(f"x{k + 1}" for k in range(dim))
    with open(path, "w") as fh:
        fh.write(f"order,id,{cols},q\n")
        for k, (i, p) in enumerate(zip(nodes, points)):
            qv = _fmt(q[k]) if q is not None else ""
            fh.write(f"{k},{int(i)}," + ",".join(_fmt(v) for v in p) + f",{qv}\n")


def load_path(path: str):
    nodes, pts, qs = [], [], []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        dim = len(header) - 3
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) < dim + 2:
                continue
            nodes.append(int(parts[1]))
            pts.append([float(v) for v in parts[2:2 + dim]])
            qs.append(float(parts[-1]) if parts[-1] else np.nan)
    return np.asarray(nodes, dtype=int), np.asarray(pts), np.asarray(qs)


def save_trajectory(record, path: str):
    with open(path, "w") as fh:
        fh.write("step,id,dt\n")
        for k, (s, dt) in enumerate(zip(record.states, record.dt)):
            fh.write(f"{k},{int(s)},{_fmt(dt)}\n")


def load_trajectory(path: str):
    states, dts = [], []
    with open(path) as fh:
        fh.readline()
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) != 3:
                continue
            states.append(int(parts[1]))
            dts.append(float(parts[2]))
    return np.asarray(states, dtype=int), np.asarray(dts)


def save_segments(segments, path: str):
    with open(path, "w") as fh:
        fh.write("segment,start_step,end_step\n")
        for k, (a, b) in enumerate(segments):
            fh.write(f"{k},{int(a)},{int(b)}\n")


def save_mep(points: np.ndarray, energies: np.ndarray, path: str):
    dim = points.shape[1]
    cols = ",".join(f"x{k + 1}" for k in range(dim))
    with open(path, "w") as fh:
        fh.write(f"order,{cols},U\n")
        for k, (p, u) in enumerate(zip(points, energies)):
            fh.write(f"{k}," + ",".join(_fmt(v) for v in p) + f",{_fmt(u)}\n")


def save_summary(summary: dict, path: str):
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_summary(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def save_generator(Q, rates_path: str, measures_path: str):
    """Export off-diagonal rates as (i, j, rate) triples plus the measures."""
    coo = Q.rates.tocoo()
    with open(rates_path, "w") as fh:
        fh.write("i,j,rate\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{int(i)},{int(j)},{_fmt(v)}\n")
    with open(measures_path, "w") as fh:
        fh.write("i,pi,vol\n")
        for i, (p, v) in enumerate(zip(Q.pi, Q.volumes)):
            fh.write(f"{i},{_fmt(p)},{_fmt(v)}\n")


def load_generator(rates_path: str, measures_path: str, points: np.ndarray):
    """Rebuild a RateMatrix from an exported rates + measures pair."""
    import scipy.sparse as sp

    from .generator import RateMatrix
    pis, vols = [], []
    with open(measures_path) as fh:
        fh.readline()
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) == 3:
                pis.append(float(parts[1]))
                vols.append(float(parts[2]))
    n = len(pis)
    rows, cols, vals = [], [], []
    with open(rates_path) as fh:
        fh.readline()
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) == 3:
                rows.append(int(parts[0]))
                cols.append(int(parts[1]))
                vals.append(float(parts[2]))
    rates = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    rates.sort_indices()
    return RateMatrix(rates, np.asarray(pis), np.asarray(vols),
                      np.asarray(points, dtype=float))


def save_dihedral_series(t, phi, psi, path: str):
    with open(path, "w") as fh:
        fh.write("t,phi,psi\n")
        for row in zip(t, phi, psi):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def load_dihedral_series(path: str):
    t, phi, psi = [], [], []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "t,phi,psi":
            raise ValueError(f"{path}: bad series header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 columns")
            t.append(float(parts[0]))
            phi.append(float(parts[1]))
            psi.append(float(parts[2]))
    return np.asarray(t), np.asarray(phi), np.asarray(psi)


def save_energy_grid(phi_grid, psi_grid, U_grid, path: str):
    with open(path, "w") as fh:
        fh.write(f"{len(phi_grid)},{len(psi_grid)}\n")
        for i, p in enumerate(phi_grid):
            for j, s in enumerate(psi_grid):
                fh.write(f"{_fmt(p)},{_fmt(s)},{_fmt(U_grid[i, j])}\n")


def load_energy_grid(path: str):
    with open(path) as fh:
        nphi, npsi = (int(v) for v in fh.readline().strip().split(","))
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rows.append([float(v) for v in line.split(",")])
    rows = np.asarray(rows)
    if rows.shape[0] != nphi * npsi:
        raise ValueError(f"{path}: expected {nphi * npsi} grid rows, got {rows.shape[0]}")
    phi_grid = rows[::npsi, 0]
    psi_grid = rows[:npsi, 1]
    U_grid = rows[:, 2].reshape(nphi, npsi)
    return phi_grid, psi_grid, U_grid


def ensure_dir(path: str):
    os.makedirs(path, exist_ok=True)
    return path
