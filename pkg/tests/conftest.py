"""Session fixtures: the sphere experiment state is built once and shared."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from cloudtpt import fileio
from cloudtpt.committor import CommittorField, solve_committor
from cloudtpt.control import ControlledChain, build_controlled_chain
from cloudtpt.experiments import (ENERGY_CAP_MULT,
    mueller_transition_endpoints, select_ball)
from cloudtpt.generator import RateMatrix, build_generator, jump_chain
from cloudtpt.pointcloud import PointCloud, Tessellation, build_tessellation, \
    sample_sphere_uniform
from cloudtpt.potentials import mueller_landscape, pullback_sphere, \
    shifted_weights, sphere_lift
from cloudtpt.sampler import TrajectoryRecord, run_controlled_walk
from cloudtpt.tpt import ReactiveGraph, reactive_current


@dataclass
class SphereSetup:
    cloud: PointCloud
    tess: Tessellation
    U: np.ndarray
    eps: float
    pi: np.ndarray
    shift: float
    Q: RateMatrix
    A: np.ndarray
    B: np.ndarray
    field: CommittorField
    graph: ReactiveGraph
    chain: ControlledChain
    a_center: np.ndarray
    b_center: np.ndarray


@pytest.fixture(scope="session")
def sphere_setup() -> SphereSetup:
    """The production workload: 4000 uniform sphere samples at eps = 0.1."""
    eps = 0.1
    cloud = sample_sphere_uniform(4000, seed=0)
    tess = build_tessellation(cloud, k=20)
    land = pullback_sphere(mueller_landscape())
    U = land(cloud.points)
    U = np.minimum(U, U[np.isfinite(U)].min() + ENERGY_CAP_MULT * eps)
    pi, shift = shifted_weights(U, eps)
    Q = build_generator(tess, pi, cloud)
    x1, x3 = mueller_transition_endpoints()
    a_c, b_c = sphere_lift(x1)[0], sphere_lift(x3)[0]
    A = select_ball(cloud.points, a_c, 0.05)
    B = select_ball(cloud.points, b_c, 0.05)
    field = solve_committor(Q, A, B, tol=1e-10)
    graph = reactive_current(Q, pi, field)
    chain = build_controlled_chain(Q, field, pi, tess.volumes, A, eps)
    return SphereSetup(cloud, tess, U, eps, pi, shift, Q, A, B, field, graph,
                       chain, a_c, b_c)


@pytest.fixture(scope="session")
def sphere_walk(sphere_setup) -> TrajectoryRecord:
    return run_controlled_walk(sphere_setup.chain, sphere_setup.B,
                               K_max=100000, seed=1000)


@pytest.fixture(scope="session")
def sphere_jump(sphere_setup):
    return jump_chain(sphere_setup.Q)


def _surrogate_alanine(seed: int = 11, n: int = 50000):
    """Metropolis walk on a two-well periodic surface shaped like the
    dihedral free energy: wells on either side of the sin(phi) = 0 lines."""
    rng = np.random.default_rng(seed)
    nphi = npsi = 48
    pg = -np.pi + 2.0 * np.pi * np.arange(nphi) / nphi
    sg = -np.pi + 2.0 * np.pi * np.arange(npsi) / npsi

    def Ufun(phi, psi):
        wa = 1.5 * (1 - np.cos(phi - 1.2)) + 0.8 * (1 - np.cos(psi + 1.0))
        wb = 1.6 * (1 - np.cos(phi + 1.4)) + 0.7 * (1 - np.cos(psi - 0.9))
        return -np.log(np.exp(-2.2 * wa) + np.exp(-2.0 * wb))

    PHI, PSI = np.meshgrid(pg, sg, indexing="ij")
    UG = Ufun(PHI, PSI)
    phi = np.empty(n)
    psi = np.empty(n)
    p, s = 1.2, -1.0
    beta = 2.2
    up = Ufun(p, s)
    for i in range(n):
        pn = (p + rng.normal(0.0, 0.35) + np.pi) % (2 * np.pi) - np.pi
        sn = (s + rng.normal(0.0, 0.35) + np.pi) % (2 * np.pi) - np.pi
        un = Ufun(pn, sn)
        if rng.random() < np.exp(-beta * (un - up)):
            p, s, up = pn, sn, un
        phi[i] = p
        psi[i] = s
    t = np.arange(n) * 0.002
    return (t, phi, psi), (pg, sg, UG)


@pytest.fixture(scope="session")
def alanine_files(tmp_path_factory):
    """Surrogate dihedral series + free-energy grid files (no MD data ships
    with the repository, so the workload shape is reproduced synthetically)."""
    root = tmp_path_factory.mktemp("alanine")
    (t, phi, psi), (pg, sg, UG) = _surrogate_alanine()
    dihedral = root / "dihedrals.csv"
    grid = root / "energy.csv"
    fileio.save_dihedral_series(t, phi, psi, str(dihedral))
    fileio.save_energy_grid(pg, sg, UG, str(grid))
    return {"dihedral": str(dihedral), "grid": str(grid),
            "a": (1.2, -1.0), "b": (-1.4, 0.9)}
