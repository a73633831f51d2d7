import numpy as np
import pytest
import scipy.sparse as sp  # noqa: F401

from cloudtpt.committor import CommittorField, solve_committor
from cloudtpt.tpt import (ReactiveGraph, bottleneck, current_profile,
                          dominant_path, kirchhoff_residual, reactive_current,
                          reactive_density, transition_rate)

from helpers import (brute_force_capacity, path_graph, random_dag,
                     random_reversible_chain, tiny_rate_matrix)


def make_graph(n, edges, q=None, A=(0,), B=None):
    B = (n - 1,) if B is None else B
    rows = np.array([e[0] for e in edges])
    cols = np.array([e[1] for e in edges])
    wts = np.array([e[2] for e in edges])
    cur = sp.csr_matrix((wts, (rows, cols)), shape=(n, n))
    q = np.linspace(0.0, 1.0, n) if q is None else np.asarray(q, float)
    return ReactiveGraph(cur, q, np.asarray(A, int), np.asarray(B, int),
                         cur - cur.T)


class TestReactiveDensity:
    def test_zero_on_boundaries(self):
        q = np.array([0.0, 0.4, 1.0])
        rho = reactive_density(np.ones(3), q)
        assert rho[0] == 0.0 and rho[2] == 0.0

    def test_half_value(self):
        assert reactive_density(np.ones(1), np.array([0.5]))[0] == pytest.approx(0.25)

    def test_maximizer_near_half(self):
        q = np.linspace(0, 1, 101)
        rho = reactive_density(np.ones(101), q)
        assert abs(q[np.argmax(rho)] - 0.5) <= 0.01


class TestReactiveCurrent:
    def test_path_graph_uniform_current(self):
        Q = path_graph(4)
        f = solve_committor(Q, [0], [3], tol=1e-13)
        g = reactive_current(Q, Q.pi, f)
        for k in range(3):
            assert g.current[k, k + 1] == pytest.approx(1.0 / 3.0, rel=1e-12)

    def test_kirchhoff_interior(self, sphere_setup):
        g = sphere_setup.graph
        Q = sphere_setup.Q
        net = kirchhoff_residual(g)
        bound = sphere_setup.field.residual * Q.m * Q.lam
        noise = 1e-15 * float(np.abs(g.signed).max())   # summation roundoff
        interior = np.ones(Q.n, bool)
        interior[g.A_indices] = False
        interior[g.B_indices] = False
        assert np.all(net[interior] <= bound[interior] + noise)

    def test_edges_point_up_the_committor(self, sphere_setup):
        g = sphere_setup.graph
        coo = g.current.tocoo()
        assert np.all(g.q[coo.col] > g.q[coo.row])

    def test_signed_antisymmetry_exact(self, sphere_setup):
        s = sphere_setup.graph.signed
        asym = (s + s.T).tocoo()
        worst = np.max(np.abs(asym.data)) if asym.nnz else 0.0
        assert worst == 0.0


class TestTransitionRate:
    def test_two_state_formula(self):
        R = np.zeros((2, 2))
        R[0, 1] = 0.7
        R[1, 0] = 0.7
        Q = tiny_rate_matrix(R, pi=np.array([2.0, 1.0]))
        f = CommittorField(np.array([0.0, 1.0]), np.array([0]), np.array([1]), 0.0)
        g = reactive_current(Q, Q.pi, f)
        # with unit volumes the flux is Q12 * pi1
        assert transition_rate(g) == pytest.approx(0.7 * 2.0, rel=1e-12)

    def test_forward_backward_symmetry(self, sphere_setup):
        Q = sphere_setup.Q
        f_rev = solve_committor(Q, sphere_setup.B, sphere_setup.A, tol=1e-10)
        g_rev = reactive_current(Q, sphere_setup.pi, f_rev)
        k_fwd = transition_rate(sphere_setup.graph)
        k_rev = transition_rate(g_rev)
        assert k_rev == pytest.approx(k_fwd, rel=1e-8)

    def test_rate_positive(self, sphere_setup):
        assert transition_rate(sphere_setup.graph) > 0.0

    def test_matches_long_run_crossing_rate(self):
        # ensemble jump-chain simulation, 1e7 total steps, as the oracle
        Q, m = random_reversible_chain(8, seed=12, p_edge=0.5)
        A, B = [0], [7]
        f = solve_committor(Q, A, B, tol=1e-13)
        g = reactive_current(Q, Q.pi, f)
        k_formula = transition_rate(g)

        from cloudtpt.generator import jump_chain
        jc = jump_chain(Q)
        P = jc.P.toarray()
        cdf = np.cumsum(P, axis=1)
        cdf[:, -1] = 1.0
        rng = np.random.default_rng(0)
        walkers = 100
        steps = 100000
        state = rng.integers(0, 8, size=walkers)
        last_in_A = state == 0
        crossings = 0
        total_time = 0.0
        inv_lam = 1.0 / jc.lam
        for _ in range(steps):
            total_time += rng.exponential(inv_lam[state]).sum()
            eta = rng.random(walkers)
            nxt = (cdf[state] < eta[:, None]).sum(axis=1)
            state = nxt
            hits_B = state == 7
            crossings += int(np.sum(hits_B & last_in_A))
            last_in_A = np.where(hits_B, False, last_in_A | (state == 0))
        k_mc = crossings / total_time * m.sum()   # rate uses unnormalized pi
        assert k_mc == pytest.approx(k_formula, rel=0.10)


class TestBottleneck:
    def test_single_path_minimum(self):
        g = make_graph(4, [(0, 1, 5.0), (1, 2, 2.0), (2, 3, 7.0)])
        (b, cap) = bottleneck(g)
        assert b == (1, 2) and cap == 2.0

    def test_parallel_routes(self):
        edges = [(0, 1, 0.3), (1, 3, 0.9), (0, 2, 0.1), (2, 3, 0.8)]
        g = make_graph(4, edges, q=[0.0, 0.5, 0.5, 1.0])
        (b, cap) = bottleneck(g)
        assert cap == 0.3

    def test_capacity_matches_enumeration(self):
        rng = np.random.default_rng(7)
        done = 0
        while done < 50:
            n, edges = random_dag(rng)
            if brute_force_capacity(n, edges, {0}, {n - 1}) < 0:
                continue
            g = make_graph(n, edges)
            (b, cap) = bottleneck(g)
            assert cap == pytest.approx(
                brute_force_capacity(n, edges, {0}, {n - 1}), abs=1e-12)
            done += 1

    def test_unreachable(self):
        g = make_graph(4, [(0, 1, 1.0), (2, 3, 1.0)])
        with pytest.raises(ValueError, match="unreachable"):
            bottleneck(g)


class TestDominantPath:
    def test_single_path_returned(self):
        g = make_graph(4, [(0, 1, 5.0), (1, 2, 2.0), (2, 3, 7.0)])
        p = dominant_path(g)
        assert list(p.nodes) == [0, 1, 2, 3]

    def test_capacity_matches_enumeration(self):
        rng = np.random.default_rng(8)
        done = 0
        while done < 50:
            n, edges = random_dag(rng)
            cap_bf = brute_force_capacity(n, edges, {0}, {n - 1})
            if cap_bf < 0:
                continue
            g = make_graph(n, edges)
            path = dominant_path(g)
            pcap = min(g.current[path.nodes[k], path.nodes[k + 1]]
                       for k in range(len(path.nodes) - 1))
            assert pcap == pytest.approx(cap_bf, abs=1e-12)
            done += 1

    def test_committor_increases_along_path(self, sphere_setup):
        p = dominant_path(sphere_setup.graph,
                          cloud_points=sphere_setup.cloud.points)
        assert np.all(np.diff(sphere_setup.field.q[p.nodes]) > 0.0)

    def test_endpoints_in_sets(self, sphere_setup):
        p = dominant_path(sphere_setup.graph,
                          cloud_points=sphere_setup.cloud.points)
        assert p.nodes[0] in set(sphere_setup.A.tolist())
        assert p.nodes[-1] in set(sphere_setup.B.tolist())


class TestCurrentProfile:
    def test_values_in_path_order(self):
        g = make_graph(4, [(0, 1, 5.0), (1, 2, 2.0), (2, 3, 7.0)])
        p = dominant_path(g, cloud_points=np.arange(4.0)[:, None])
        prof = current_profile(p, g)
        assert [w for _, w in prof] == [5.0, 2.0, 7.0]

    def test_minimum_equals_capacity(self, sphere_setup):
        p = dominant_path(sphere_setup.graph,
                          cloud_points=sphere_setup.cloud.points)
        prof = current_profile(p, sphere_setup.graph)
        (_, cap) = bottleneck(sphere_setup.graph)
        assert min(w for _, w in prof) == pytest.approx(cap, rel=1e-12)

    def test_arc_positions_monotone(self, sphere_setup):
        p = dominant_path(sphere_setup.graph,
                          cloud_points=sphere_setup.cloud.points)
        pos = [s for s, _ in current_profile(p, sphere_setup.graph)]
        assert all(pos[k] < pos[k + 1] for k in range(len(pos) - 1))

    def test_non_edge_rejected(self):
        g = make_graph(4, [(0, 1, 5.0), (1, 2, 2.0), (2, 3, 7.0)])
        from cloudtpt.tpt import DiscretePath
        bad = DiscretePath(np.array([0, 2]), np.zeros((2, 1)))
        with pytest.raises(ValueError, match="not an edge"):
            current_profile(bad, g)
