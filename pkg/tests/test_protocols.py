import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gossiplab.graph import (Graph, connected_components, incidence_matrix, make_complete,
                             make_cycle, make_grid2d, make_path, make_rgg)
from gossiplab.linalg import project_solution_set
from gossiplab.protocols import (GossipState, ProtocolConfig, edge_probabilities,
                                 node_probabilities, sample, sample_batch, step_block, step_gge,
                                 step_kaczmarz_motzkin, step_laplacian_block, step_laplacian_rk,
                                 step_mrk, step_pairwise_weighted, step_shift_register)


def st_of(x, xp=None):
    x = np.array(x, dtype=float)
    return GossipState(x, x.copy() if xp is None else np.array(xp, dtype=float))


class TestConfig:
    def test_defaults(self):
        pc = ProtocolConfig()
        assert (pc.protocol, pc.omega, pc.beta, pc.tau) == ("pairwise", 1.0, 0.0, 1)

    @pytest.mark.parametrize("omega", [0.0, 2.0, -1.0, 2.5])
    def test_omega_range(self, omega):
        with pytest.raises(ValueError, match="omega"):
            ProtocolConfig(omega=omega)
        ProtocolConfig(omega=omega, allow_divergent=True)

    def test_beta_range(self):
        with pytest.raises(ValueError, match="beta"):
            ProtocolConfig(protocol="mrk", beta=1.0)

    def test_node_modes(self):
        with pytest.raises(ValueError):
            ProtocolConfig(protocol="gge", sampling="uniform-edge")
        with pytest.raises(ValueError):
            ProtocolConfig(protocol="pairwise", sampling="uniform-node")

    def test_block_forces_edge_sets(self):
        assert ProtocolConfig(protocol="block", tau=3).sampling == "uniform-edge-set"

    def test_unknown(self):
        with pytest.raises(ValueError):
            ProtocolConfig(protocol="flooding")


class TestSampling:
    def test_uniform_weights(self):
        np.testing.assert_allclose(edge_probabilities(make_grid2d(3, 3)), 1 / 12)

    def test_heavy_node(self):
        g = make_complete(3)
        w = np.array([1.0, 1.0, 1e6])
        p = edge_probabilities(g, w)
        raw = np.array([1 / w[i] + 1 / w[j] for i, j in g.edges])
        np.testing.assert_allclose(p, raw / raw.sum())
        assert p[g.edges.index((0, 1))] > p[g.edges.index((0, 2))]

    def test_node_probabilities(self):
        g = make_path(3)
        # ||L_i||^2 = d_i^2 + d_i for B = I
        np.testing.assert_allclose(node_probabilities(g), np.array([2.0, 6.0, 2.0]) / 10)

    def test_full_edge_set(self, rng):
        g = make_cycle(5)
        draws = sample_batch(g, ProtocolConfig(protocol="block", tau=5), rng, 4)
        assert all(sorted(r) == list(range(5)) for r in draws.tolist())

    def test_edge_set_rows_distinct(self, rng):
        g = make_grid2d(4, 4)
        draws = sample_batch(g, ProtocolConfig(protocol="block", tau=7), rng, 200)
        assert draws.shape == (200, 7)
        assert all(len(set(r)) == 7 for r in draws.tolist())
        # marginal frequency of each edge is tau/m
        freq = np.bincount(draws.ravel(), minlength=g.m) / 200
        assert np.all(np.abs(freq - 7 / g.m) < 0.15)

    def test_tau_too_large(self, rng):
        with pytest.raises(ValueError):
            sample_batch(make_cycle(4), ProtocolConfig(protocol="block", tau=5), rng, 1)

    def test_sample_kinds(self, rng):
        g = make_cycle(6)
        assert sample(g, ProtocolConfig(), rng).kind == "edge"
        assert sample(g, ProtocolConfig(protocol="gge", sampling="uniform-node"), rng).kind == "node"
        s = sample(g, ProtocolConfig(protocol="block", tau=2), rng)
        assert s.kind == "edge-set" and len(s.indices) == 2


class TestPairwise:
    def test_plain_average(self):
        out = step_pairwise_weighted(st_of([0.0, 2.0]), (0, 1))
        np.testing.assert_allclose(out.x, [1.0, 1.0])
        assert out.k == 1

    def test_weighted(self):
        out = step_pairwise_weighted(st_of([0.0, 4.0]), (0, 1), 1.0, [1.0, 3.0])
        np.testing.assert_allclose(out.x, [3.0, 3.0])

    def test_zero_step(self):
        s = st_of([0.3, -1.0, 2.0])
        np.testing.assert_array_equal(step_pairwise_weighted(s, (0, 2), 0.0).x, s.x)

    def test_self_loop(self):
        with pytest.raises(ValueError):
            step_pairwise_weighted(st_of([1.0, 2.0]), (1, 1))


class TestLaplacian:
    def test_consensus_fixed_point(self):
        g = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
        s = st_of([2.0, 2.0, 2.0, 2.0])
        np.testing.assert_array_equal(step_laplacian_rk(s, g, 0).x, s.x)

    def test_path_center(self):
        out = step_laplacian_rk(st_of([0.0, 3.0, 0.0]), make_path(3), 1)
        np.testing.assert_allclose(out.x, [1.0, 1.0, 1.0])

    def test_sum_preserved(self, rng):
        g = make_rgg(20, seed=2)
        s = st_of(rng.standard_normal(20))
        for node in rng.integers(0, 20, 50):
            s2 = step_laplacian_rk(s, g, int(node), 1.3)
            assert s2.x.sum() == pytest.approx(s.x.sum(), abs=1e-12)
            s = s2

    def test_matches_single_row_block(self, rng):
        g = make_grid2d(3, 3)
        w = rng.uniform(0.5, 2.0, g.n)
        s = st_of(rng.standard_normal(g.n))
        a = step_laplacian_rk(s, g, 4, 0.8, w).x
        b = step_laplacian_block(s, g, [4], 0.8, w).x
        np.testing.assert_allclose(a, b, atol=1e-12)


class TestBlock:
    def test_whole_path(self):
        out = step_block(st_of([0.0, 3.0, 6.0]), make_path(3), [0, 1])
        np.testing.assert_allclose(out.x, [3.0, 3.0, 3.0])

    def test_empty_set(self):
        s = st_of([0.0, 3.0, 6.0])
        np.testing.assert_array_equal(step_block(s, make_path(3), []).x, s.x)

    def test_single_edge_is_pairwise(self, rng):
        g = make_cycle(7)
        w = rng.uniform(0.5, 3.0, 7)
        s = st_of(rng.standard_normal(7))
        e = 3
        np.testing.assert_allclose(step_block(s, g, [e], 1.4, 0.0, w).x,
                                   step_pairwise_weighted(s, g.edges[e], 1.4, w).x, atol=1e-14)

    @pytest.mark.parametrize("trial", range(5))
    def test_projection_oracle(self, trial):
        r = np.random.default_rng(trial)
        g = make_rgg(9, seed=trial)
        C = r.choice(g.m, r.integers(1, g.m + 1), replace=False)
        w = r.uniform(0.5, 2.0, g.n)
        s = st_of(r.standard_normal(g.n))
        Q = incidence_matrix(g)[np.sort(C)]
        np.testing.assert_allclose(step_block(s, g, C, 1.0, 0.0, w).x,
                                   project_solution_set(s.x, Q, w=w), atol=1e-10)

    def test_momentum_on_untouched_node(self):
        s = st_of([0.0, 1.0, 2.0], [0.0, 1.0, 1.0])
        out = step_block(s, make_path(3), [0], 1.0, 0.5)
        assert out.x[2] == pytest.approx(2.5)


class TestMRK:
    def test_zero_momentum(self, rng):
        s = st_of(rng.standard_normal(5), rng.standard_normal(5))
        np.testing.assert_array_equal(step_mrk(s, (1, 3), 1.0, 0.0).x,
                                      step_pairwise_weighted(s, (1, 3), 1.0).x)

    def test_idle_momentum(self):
        s = st_of([0.0, 0.0, 2.0], [0.0, 0.0, 1.0])
        assert step_mrk(s, (0, 1), 1.0, 0.5).x[2] == pytest.approx(2.5)

    def test_sum_constant_with_equal_registers(self, rng):
        g = make_grid2d(4, 4)
        s = GossipState.initial(rng.standard_normal(g.n))
        total = s.x.sum()
        for e in rng.integers(0, g.m, 500):
            s = step_mrk(s, g.edges[int(e)], 1.1, 0.3)
        assert abs(s.x.sum() - total) <= 1e-10 * abs(total)


class TestShiftRegister:
    def test_unit_step_averages(self):
        out = step_shift_register(st_of([0.0, 2.0, 5.0]), (0, 1), 1.0)
        np.testing.assert_allclose(out.x, [1.0, 1.0, 5.0])

    def test_worked_values(self):
        out = step_shift_register(st_of([0.0, 2.0, 5.0]), (0, 1), 1.2)
        np.testing.assert_allclose(out.x, [1.2, 0.8, 5.0])
        np.testing.assert_allclose(out.x_prev, [0.0, 2.0, 5.0])

    def test_matches_mrk_on_pair(self, rng):
        omega = 1.3
        x, xp = rng.standard_normal(4), rng.standard_normal(4)
        a = step_shift_register(st_of(x, xp), (0, 2), omega)
        b = step_mrk(st_of(x, xp), (0, 2), omega, omega - 1.0)
        np.testing.assert_allclose(a.x[[0, 2]], b.x[[0, 2]], atol=1e-14)
        # idle nodes stay put in the shift-register scheme
        np.testing.assert_array_equal(a.x[[1, 3]], x[[1, 3]])

    @pytest.mark.parametrize("omega", [0.5, 0.99, 2.0])
    def test_omega_range(self, omega):
        with pytest.raises(ValueError):
            step_shift_register(st_of([0.0, 1.0]), (0, 1), omega)


class TestGreedy:
    def test_max_gap(self):
        out = step_gge(st_of([0.0, 5.0, 1.0]), make_path(3), 1)
        np.testing.assert_allclose(out.x, [2.5, 2.5, 1.0])

    def test_isolated(self):
        g = Graph(3, ((0, 1),))
        with pytest.raises(ValueError):
            step_gge(st_of([0.0, 1.0, 2.0]), g, 2)

    def test_tie_break_uses_draw(self):
        g = Graph.from_edges(3, [(0, 1), (0, 2)])
        s = st_of([0.0, 1.0, -1.0])
        lo = step_gge(s, g, 0, u=0.0).x
        hi = step_gge(s, g, 0, u=0.99).x
        np.testing.assert_allclose(lo, [0.5, 0.5, -1.0])
        np.testing.assert_allclose(hi, [-0.5, 1.0, -0.5])

    def test_tie_break_uniform(self):
        g = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
        s = st_of([0.0, 1.0, 1.0, 1.0])
        r = np.random.default_rng(0)
        hits = np.zeros(4)
        for _ in range(3000):
            hits[np.flatnonzero(step_gge(s, g, 0, rng=r).x[1:] != 1.0) + 1] += 1
        assert np.all(np.abs(hits[1:] / 3000 - 1 / 3) < 0.04)

    def test_motzkin_single_row_is_rk(self, rng):
        A = rng.standard_normal((3, 4))
        b = rng.standard_normal(3)
        s = st_of(rng.standard_normal(4))
        out = step_kaczmarz_motzkin(s, [1], A, b).x
        a = A[1]
        np.testing.assert_allclose(out, s.x - (a @ s.x - b[1]) / (a @ a) * a)

    def test_motzkin_zero_residual(self):
        g = make_cycle(4)
        s = st_of([1.0, 1.0, 1.0, 1.0])
        np.testing.assert_array_equal(step_kaczmarz_motzkin(s, [0, 1], incidence_matrix(g)).x, s.x)

    def test_motzkin_empty(self):
        with pytest.raises(ValueError):
            step_kaczmarz_motzkin(st_of([1.0, 2.0]), [], np.array([[1.0, -1.0]]))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 29))
def test_gge_equals_motzkin(seed, node):
    g = make_rgg(30, seed=5)
    r = np.random.default_rng(seed)
    # integer states make ties common
    s = st_of(r.integers(-3, 4, g.n).astype(float))
    u = float(r.random())
    Q = incidence_matrix(g)
    a = step_gge(s, g, node, u=u).x
    b = step_kaczmarz_motzkin(s, g.incident_edges(node), Q, u=u).x
    assert np.array_equal(a, b)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 1.95))
def test_weighted_sum_invariant(seed, omega):
    r = np.random.default_rng(seed)
    g = make_grid2d(3, 4)
    w = r.uniform(0.2, 5.0, g.n)
    s = st_of(r.standard_normal(g.n))
    total = w @ s.x
    for e in r.integers(0, g.m, 30):
        s = step_pairwise_weighted(s, g.edges[int(e)], omega, w)
    assert abs(w @ s.x - total) <= 1e-11 * max(1.0, np.abs(w * s.x).sum())
    C = r.choice(g.m, 4, replace=False)
    s = step_block(s, g, C, omega, 0.0, w)
    assert abs(w @ s.x - total) <= 1e-11 * max(1.0, np.abs(w * s.x).sum())
