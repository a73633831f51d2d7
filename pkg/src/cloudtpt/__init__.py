"""Data-driven transition path analysis on manifold point clouds."""

from .committor import CommittorField, committor_residual, solve_committor
from .control import (ControlledChain, build_controlled_chain,
                      discrete_control_field, effective_potential_field)
from .experiments import (DihedralSeries, ExperimentConfig,
                          enrich_transition_region, ingest_alanine,
                          run_experiment, sparsify)
from .generator import (JumpChain, RateMatrix, build_generator, jump_chain,
                        stationarity_residual)
from .meanpath import (MeanPathState, collect_ball, init_path,
                       iterate_mean_path, local_mean, reparameterize)
from .pointcloud import (PointCloud, Tessellation, build_tessellation,
                         sample_sphere_uniform, sample_torus_uniform)
from .potentials import (Landscape, MuellerParams, equilibrium_weights,
                         find_stationary_points, mueller, mueller_landscape,
                         mueller_perturbed, pullback_sphere, pullback_torus)
from .reference import fw_action, string_mep
from .sampler import (TrajectoryRecord, occupation_statistics,
                      run_controlled_walk, run_uncontrolled_walk)
from .tpt import (DiscretePath, ReactiveGraph, bottleneck, current_profile,
                  dominant_path, reactive_current, reactive_density,
                  transition_rate)

__version__ = "0.1.0"
