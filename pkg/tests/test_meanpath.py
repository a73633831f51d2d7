import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import array_shapes, arrays

from cloudtpt.meanpath import (collect_ball, default_ball_radius, init_path,
                               iterate_mean_path, local_mean, reparameterize,
                               tune_ball_radius)
from cloudtpt.pointcloud import PointCloud
from cloudtpt.sampler import TrajectoryRecord


def line_record(n=60, dt=1.0):
    """Visits marching back and forth along a straight segment."""
    idx = np.concatenate([np.arange(n), np.arange(n)[::-1]])
    idx = np.tile(idx, 4)
    return TrajectoryRecord(idx, np.full(len(idx), dt), [], 0)


def line_cloud(n=60):
    x = np.linspace(0.0, 1.0, n)
    return PointCloud(np.stack([x, np.zeros(n), np.zeros(n)], axis=1))


class TestInitPath:
    def test_coincident_endpoints_rejected(self):
        cloud = line_cloud()
        rec = line_record()
        with pytest.raises(ValueError, match="coincide"):
            init_path(np.zeros(3), np.zeros(3), 10, rec, cloud)

    def test_endpoints_pinned(self):
        cloud = line_cloud()
        rec = line_record()
        a = cloud.points[0]
        b = cloud.points[-1]
        state = init_path(a, b, 10, rec, cloud)
        assert np.array_equal(state.points[0], a)
        assert np.array_equal(state.points[-1], b)

    def test_collinear_data_stays_on_line(self):
        cloud = line_cloud()
        rec = line_record()
        state = init_path(cloud.points[0], cloud.points[-1], 12, rec, cloud)
        assert np.max(np.abs(state.points[:, 1:])) == 0.0

    def test_needs_three_points(self):
        with pytest.raises(ValueError):
            init_path(np.zeros(3), np.ones(3), 2, line_record(), line_cloud())

    def test_empty_trajectory_rejected(self):
        rec = TrajectoryRecord(np.array([], int), np.array([]), [], 0)
        with pytest.raises(ValueError, match="empty"):
            init_path(np.zeros(3), np.ones(3), 5, rec, line_cloud())


class TestCollectBall:
    def test_empty_when_radius_too_small(self):
        hits, w, pts = collect_ball(line_record(), line_cloud(),
                                    np.array([0.5, 1.0, 0.0]), r0=0.5)
        assert len(hits) == 0

    def test_infinite_radius_collects_total_time(self):
        rec = line_record()
        hits, w, pts = collect_ball(rec, line_cloud(),
                                    np.array([0.5, 0.0, 0.0]), r0=1e9)
        assert w.sum() == pytest.approx(rec.total_time, rel=1e-12)

    def test_weights_linear_in_dt(self):
        cloud = line_cloud()
        r1 = line_record(dt=1.0)
        r2 = line_record(dt=2.0)
        p = np.array([0.3, 0.0, 0.0])
        _, w1, _ = collect_ball(r1, cloud, p, 0.1)
        _, w2, _ = collect_ball(r2, cloud, p, 0.1)
        assert np.allclose(w2, 2.0 * w1)

    def test_radius_validation(self):
        with pytest.raises(ValueError):
            collect_ball(line_record(), line_cloud(), np.zeros(3), 0.0)


class TestLocalMean:
    def test_single_sample(self):
        p = local_mean(np.array([[1.0, 2.0]]), np.array([3.0]))
        assert np.array_equal(p, [1.0, 2.0])

    def test_equal_weight_midpoint(self):
        p = local_mean(np.array([[0.0], [1.0]]), np.array([2.0, 2.0]))
        assert p[0] == pytest.approx(0.5)

    def test_weighted_three_to_one(self):
        p = local_mean(np.array([[0.0], [1.0]]), np.array([1.0, 3.0]))
        assert p[0] == pytest.approx(0.75)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            local_mean(np.empty((0, 2)), np.empty(0))


class TestReparameterize:
    def test_uniform_path_fixed_point(self):
        pts = np.stack([np.linspace(0, 1, 9), np.linspace(0, 2, 9)], axis=1)
        out = reparameterize(pts)
        assert np.max(np.abs(out - pts)) < 1e-12

    def test_three_collinear_points(self):
        pts = np.array([[0.0], [0.2], [1.0]])
        out = reparameterize(pts)
        assert np.allclose(out.ravel(), [0.0, 0.5, 1.0], atol=1e-12)

    def test_equal_spacing(self):
        rng = np.random.default_rng(0)
        pts = np.cumsum(rng.uniform(0.1, 1.0, size=(20, 3)), axis=0)
        out = reparameterize(pts)
        seg = np.linalg.norm(np.diff(out, axis=0), axis=1)
        assert np.max(np.abs(seg - seg.mean())) / seg.mean() < 1e-9

    def test_idempotent(self):
        rng = np.random.default_rng(1)
        pts = np.cumsum(rng.uniform(0.1, 1.0, size=(15, 2)), axis=0)
        once = reparameterize(pts)
        twice = reparameterize(once)
        assert np.max(np.abs(twice - once)) < 1e-12

    def test_interpolation_endpoint_orientation(self):
        # when a target length equals a cumulative length exactly, the
        # interpolated point is that vertex, not its successor
        pts = np.array([[0.0], [0.5], [1.0], [1.5], [2.0]])
        out = reparameterize(pts)
        assert np.allclose(out, pts, atol=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, array_shapes(min_dims=2, max_dims=2,
                                           min_side=3, max_side=12),
                  elements=st.floats(-50, 50)),
           st.floats(-100, 100))
    def test_translation_equivariance(self, pts, shift):
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if seg.sum() <= 1e-6:
            return
        a = reparameterize(pts)
        b = reparameterize(pts + shift)
        assert np.max(np.abs((a + shift) - b)) < 1e-9 * max(1.0, abs(shift))

    def test_zero_length_rejected(self):
        with pytest.raises(ValueError):
            reparameterize(np.zeros((4, 2)))


class TestIterate:
    def test_straight_line_equilibrium(self):
        cloud = line_cloud(61)
        rec = line_record(61)
        state = init_path(cloud.points[0], cloud.points[-1], 13, rec, cloud)
        state = dataclasses.replace(state, r0=0.08)
        out = iterate_mean_path(rec, cloud, state, L_max=50)
        assert out.converged
        # the converged projected path marches monotonically along the line
        xs = out.points[:, 0]
        assert xs[0] == 0.0 and xs[-1] == 1.0
        assert np.all(np.diff(xs) >= 0.0)
        gaps = np.diff(xs[1:-1])
        assert np.max(np.abs(gaps - gaps.mean())) < 0.05

    def test_endpoints_pinned_through_iterations(self, sphere_walk, sphere_setup):
        s = sphere_setup
        a = s.cloud.points[s.A[0]]
        b = s.cloud.points[s.B[0]]
        state = init_path(a, b, 40, sphere_walk, s.cloud)
        r0 = tune_ball_radius(sphere_walk, s.cloud, state,
                              default_ball_radius(s.cloud))
        state = dataclasses.replace(state, r0=r0)
        out = iterate_mean_path(sphere_walk, s.cloud, state, L_max=20)
        assert np.array_equal(out.points[0], a)
        assert np.array_equal(out.points[-1], b)
        assert out.converged

    def test_all_empty_balls_abort_with_guidance(self):
        cloud = line_cloud()
        rec = line_record()
        state = init_path(cloud.points[0], cloud.points[-1], 30, rec, cloud)
        # shift the interior off the sample line so every ball is empty
        adrift = state.points.copy()
        adrift[1:-1, 1] += 0.5
        state = dataclasses.replace(state, points=adrift, r0=0.01)
        with pytest.raises(ValueError, match="increase r0"):
            iterate_mean_path(rec, cloud, state, L_max=5)

    def test_r0_required(self):
        cloud = line_cloud()
        rec = line_record()
        state = init_path(cloud.points[0], cloud.points[-1], 5, rec, cloud)
        with pytest.raises(ValueError, match="r0"):
            iterate_mean_path(rec, cloud, state, L_max=5)


class TestBallRadius:
    def test_default_scales_with_spacing(self):
        cloud = line_cloud(101)   # spacing 0.01
        assert default_ball_radius(cloud) == pytest.approx(0.05, rel=1e-6)

    def test_tuning_reaches_min_samples(self):
        cloud = line_cloud(61)
        rec = line_record(61)
        state = init_path(cloud.points[0], cloud.points[-1], 10, rec, cloud)
        r0 = tune_ball_radius(rec, cloud, state, 1e-4, min_samples=5)
        for p in state.points:
            hits, _, _ = collect_ball(rec, cloud, p, r0)
            assert len(hits) >= 5
