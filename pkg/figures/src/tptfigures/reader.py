"""Read-only access to a run directory's text outputs.

Only files documented in the pipeline's output layout are touched; no
quantity is recomputed here, values are plotted as stored.
"""

from __future__ import annotations

import json
import os

import numpy as np

__all__ = ["RunData", "load_run"]


class RunData:
    def __init__(self, run_dir: str):
        self.run_dir = run_dir
        self.summary = self._json("summary.json")
        self.points = self._cloud("cloud.csv")
        _, self.energies = self._field("energies.csv")
        _, self.committor = self._field("committor.csv")

    def path(self, name: str) -> str:
        p = os.path.join(self.run_dir, name)
        if not os.path.exists(p):
            raise FileNotFoundError(f"run output {name!r} missing in {self.run_dir}")
        return p

    def _json(self, name: str) -> dict:
        with open(self.path(name)) as fh:
            return json.load(fh)

    def _cloud(self, name: str) -> np.ndarray:
        rows = []
        with open(self.path(name)) as fh:
            fh.readline()
            for line in fh:
                parts = line.strip().split(",")
                if len(parts) > 1:
                    rows.append([float(v) for v in parts[1:]])
        return np.asarray(rows)

    def _field(self, name: str):
        ids, vals = [], []
        with open(self.path(name)) as fh:
            fh.readline()
            for line in fh:
                parts = line.strip().split(",")
                if len(parts) == 2:
                    ids.append(int(parts[0]))
                    vals.append(float(parts[1]))
        return np.asarray(ids), np.asarray(vals)

    def edges(self, name: str = "current.csv"):
        out = {}
        with open(self.path(name)) as fh:
            fh.readline()
            for line in fh:
                parts = line.strip().split(",")
                if len(parts) == 3:
                    out[(int(parts[0]), int(parts[1]))] = float(parts[2])
        return out

    def node_path(self, name: str):
        nodes, pts = [], []
        with open(self.path(name)) as fh:
            header = fh.readline().strip().split(",")
            dim = sum(1 for c in header if c.startswith("x"))
            for line in fh:
                parts = line.strip().split(",")
                if len(parts) < 2 + dim:
                    continue
                nodes.append(int(parts[1]))
                pts.append([float(v) for v in parts[2:2 + dim]])
        return np.asarray(nodes, int), np.asarray(pts)

    @property
    def experiment(self) -> str:
        return self.summary.get("config", {}).get("experiment", "custom")

    @property
    def torus_radii(self):
        cfg = self.summary.get("config", {})
        return float(cfg.get("torus_R", 2.0)), float(cfg.get("torus_r", 1.0))

    def to_plane(self, pts: np.ndarray) -> np.ndarray:
        """Chart projection used for the 2D views, per experiment type."""
        if self.experiment == "sphere-mueller":
            denom = np.maximum(1.0 - pts[:, 2], 1e-12)
            return np.stack([pts[:, 0] / denom, pts[:, 1] / denom], axis=1)
        R, r = self.torus_radii
        rho = np.hypot(pts[:, 0], pts[:, 1])
        theta = np.arctan2(pts[:, 2] / r, (rho - R) / r)
        phi = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * np.pi)
        return np.stack([theta, phi], axis=1)


def load_run(run_dir: str) -> RunData:
    return RunData(run_dir)
