import math

import numpy as np
import pytest

from gossiplab.graph import make_complete, make_cycle, make_grid2d, write_edgelist
from gossiplab.harness import (DivergenceError, ExactnessError, ExperimentConfig, SweepTable,
                               Trajectory, build_graph, compare_protocols,
                               empirical_averaging_time, export_csv, fit_linear_rate,
                               format_csv, initial_values, iterations_to_tolerance, load_config,
                               median_trajectory, node_weights, parse_config_text,
                               read_sweep_csv, read_trajectory_csv, run_experiment, run_seeds,
                               sweep_block_size)
from gossiplab.linalg import project_solution_set
from gossiplab.graph import incidence_matrix


class TestConfig:
    def test_flat_round_trip(self):
        cfg = ExperimentConfig(graph_family="grid", graph_rows=3, omega=1.5, acc_option=2)
        flat = cfg.to_flat()
        assert flat["graph.family"] == "grid" and flat["acc.option"] == 2
        assert ExperimentConfig.from_flat({k: str(v) for k, v in flat.items()}) == cfg

    def test_parse_text(self):
        text = "# comment\ngraph.family = cycle\n\ngraph.n = 12  # trailing\nomega=1.3\n"
        assert parse_config_text(text) == {"graph.family": "cycle", "graph.n": "12", "omega": "1.3"}

    def test_parse_error(self):
        with pytest.raises(ValueError, match="line 2"):
            parse_config_text("a = 1\nbroken\n")

    def test_load_with_override(self, tmp_path):
        p = tmp_path / "exp.cfg"
        p.write_text("graph.family = grid\ngraph.rows = 4\ngraph.cols = 4\nprotocol = mrk\n"
                     "beta = 0.3\nmax_iters = 1e5\nseed = 7\nout = traj.csv\n")
        cfg = load_config(p, {"beta": "0.1"})
        assert (cfg.protocol, cfg.beta, cfg.max_iters, cfg.seed) == ("mrk", 0.1, 100000, 7)
        assert build_graph(cfg).m == 24

    def test_unknown_key(self):
        with pytest.raises(KeyError):
            ExperimentConfig.from_flat({"graph.colour": "red"})

    @pytest.mark.parametrize("kw", [dict(epsilon=0.0), dict(epsilon=1.0), dict(max_iters=0),
                                    dict(init="poisson"), dict(error_metric="abs")])
    def test_invariants(self, kw):
        with pytest.raises(ValueError):
            ExperimentConfig(**kw)

    def test_tolerance_semantics(self):
        assert ExperimentConfig(epsilon=0.1).tolerance == 0.1
        assert ExperimentConfig(epsilon=0.1, error_metric="norm").tolerance == pytest.approx(0.01)

    def test_graph_from_file(self, tmp_path):
        p = tmp_path / "g.txt"
        write_edgelist(make_grid2d(2, 3), p)
        assert build_graph(ExperimentConfig(graph_family="file", graph_path=str(p))) == make_grid2d(2, 3)

    def test_weights(self):
        g = make_grid2d(2, 3)
        np.testing.assert_array_equal(node_weights(ExperimentConfig(weights="degree"), g), g.degrees)
        w = node_weights(ExperimentConfig(weights="custom:1,2,3,4,5,6"), g)
        np.testing.assert_array_equal(w, np.arange(1, 7))
        with pytest.raises(ValueError):
            node_weights(ExperimentConfig(weights="custom:1,2"), g)

    def test_integer_init(self):
        np.testing.assert_array_equal(initial_values(ExperimentConfig(init="integers"), 4), [1, 2, 3, 4])


class TestRun:
    def test_triangle(self):
        cfg = ExperimentConfig(graph_family="cycle", graph_n=3, epsilon=1e-6, error_metric="norm")
        c = np.array([0.0, 1.0, 2.0])
        t = run_experiment(cfg, c=c)
        assert t.converged and t.status == "converged"
        xstar = project_solution_set(c, incidence_matrix(make_cycle(3)))
        np.testing.assert_allclose(xstar, [1.0, 1.0, 1.0])
        assert np.linalg.norm(t.final_x - xstar) <= 1e-6 * np.linalg.norm(c - xstar)

    def test_trajectory_invariants(self):
        t = run_experiment(ExperimentConfig(graph_n=10, max_iters=500, epsilon=1e-30))
        assert t.rel_error_sq[0] == 1.0
        assert np.all(np.diff(t.k) > 0)
        assert np.all(t.rel_error_sq >= 0)
        assert t.status == "budget" and math.isinf(t.iterations)
        assert t.rho == pytest.approx(1 - (2 - 2 * math.cos(2 * math.pi / 10)) / 20)

    def test_deterministic(self):
        cfg = ExperimentConfig(graph_family="grid", graph_rows=4, graph_cols=4, protocol="mrk",
                               beta=0.2, max_iters=2000)
        assert format_csv(run_experiment(cfg)) == format_csv(run_experiment(cfg))
        assert format_csv(run_experiment(cfg)) != format_csv(run_experiment(cfg.with_(seed=1)))

    def test_default_stride(self):
        small = run_experiment(ExperimentConfig(graph_n=20, max_iters=300, epsilon=1e-30))
        assert np.all(np.diff(small.k) == 1)
        big = run_experiment(ExperimentConfig(graph_n=150, max_iters=20000, epsilon=1e-30))
        assert big.k[1] == math.ceil(20000 / 5000)
        assert len(big) <= 5002

    def test_divergence(self):
        cfg = ExperimentConfig(graph_n=10, omega=2.5, override=True, max_iters=10000)
        with pytest.raises(DivergenceError) as info:
            run_experiment(cfg)
        assert info.value.trajectory.status == "diverged"
        assert info.value.trajectory.terminal_error > 1e6

    def test_omega_guard(self):
        with pytest.raises(ValueError):
            run_experiment(ExperimentConfig(omega=2.5))

    def test_consensus_start(self):
        with pytest.raises(ValueError, match="consensus"):
            run_experiment(ExperimentConfig(graph_n=5), c=np.ones(5))

    def test_exactness_guard(self, monkeypatch):
        import gossiplab.harness as H
        from gossiplab.rates import ExactnessResult
        monkeypatch.setattr(H, "_exactness", lambda *a: ExactnessResult(False, 2, 1, 0.0))
        with pytest.raises(ExactnessError):
            run_experiment(ExperimentConfig(graph_n=5))

    @pytest.mark.parametrize("kw", [dict(protocol="pairwise"), dict(protocol="laplacian"),
                                    dict(protocol="block", tau=3), dict(protocol="mrk", beta=0.3),
                                    dict(protocol="shift-register", omega=1.3),
                                    dict(protocol="gge"), dict(protocol="accgossip"),
                                    dict(protocol="accgossip", acc_option=2, acc_nu="exact"),
                                    dict(protocol="rnm", tau=4),
                                    dict(protocol="pairwise", weights="degree"),
                                    dict(protocol="block", tau=2, weights="degree")])
    def test_every_protocol_converges(self, kw):
        cfg = ExperimentConfig(graph_family="grid", graph_rows=4, graph_cols=4, epsilon=1e-8,
                               max_iters=200000, **kw)
        t = run_experiment(cfg)
        assert t.converged
        assert t.mass_drift <= 1e-9

    def test_degree_weights_target(self):
        g = make_grid2d(3, 4)
        cfg = ExperimentConfig(graph_family="grid", graph_rows=3, graph_cols=4, weights="degree",
                               epsilon=1e-12, max_iters=10**6)
        t = run_experiment(cfg)
        c = initial_values(cfg, g.n)
        d = g.degrees
        np.testing.assert_allclose(t.final_x, np.full(g.n, d @ c / d.sum()), atol=1e-5)

    def test_scaled_rk_rgg_linear(self):
        cfg = ExperimentConfig(graph_family="rgg", graph_n=100, weights="degree", epsilon=1e-10,
                               max_iters=400000, record_stride=100)
        t = run_experiment(cfg)
        fit = fit_linear_rate(t)
        k, e = t.k[t.k.size // 10:], np.log(t.rel_error_sq[t.k.size // 10:])
        resid = e - np.polyval(np.polyfit(k, e, 1), k)
        r2 = 1 - resid.var() / e.var()
        assert fit.factor < 1 and r2 > 0.98

    def test_overrelaxation_grid(self):
        base = ExperimentConfig(graph_family="grid", graph_rows=10, graph_cols=10, max_iters=10**6)
        slow = np.median(iterations_to_tolerance(base, range(10)))
        fast = np.median(iterations_to_tolerance(base.with_(omega=1.9), range(10)))
        assert fast < slow


class TestFit:
    def test_geometric(self):
        k = np.arange(100)
        fit = fit_linear_rate((k, 0.9 ** k))
        assert fit.factor == pytest.approx(0.9, abs=1e-12)
        assert not fit.truncated

    def test_constant(self):
        assert fit_linear_rate((np.arange(50), np.ones(50))).factor == pytest.approx(1.0)

    def test_too_few(self):
        with pytest.raises(ValueError, match="at least"):
            fit_linear_rate((np.arange(10), 0.5 ** np.arange(10.0)))

    def test_zero_truncates(self):
        k = np.arange(60)
        e = 0.8 ** k
        e[40:] = 0.0
        fit = fit_linear_rate((k, e))
        assert fit.truncated and fit.points == 36
        assert fit.factor == pytest.approx(0.8, abs=1e-12)

    def test_median_trajectory(self):
        a = Trajectory(np.arange(5), np.array([1, .5, .25, .1, .05]), False, "budget")
        b = Trajectory(np.arange(4), np.array([1, .7, .35, .2]), True, "converged")
        k, e = median_trajectory([a, b])
        np.testing.assert_array_equal(k, np.arange(4))
        np.testing.assert_allclose(e, [1, .6, .3, .15])


class TestSweep:
    def test_full_block_one_step(self):
        g = make_cycle(12)
        base = ExperimentConfig(graph_n=12, init="integers", epsilon=0.1, error_metric="norm")
        tab = sweep_block_size(g, [1, 12], 0.1, base, seeds=range(3))
        assert tab.iterations[-1] == 1.0
        assert tab.reference[0] == tab.iterations[0]

    def test_tau_range(self):
        with pytest.raises(ValueError):
            sweep_block_size(make_cycle(5), [6], 0.1)

    def test_singleton_block_matches_pairwise_statistics(self):
        base = ExperimentConfig(graph_n=30, init="integers", epsilon=0.1, error_metric="norm",
                                max_iters=10**5)
        g = make_cycle(30)
        blk = np.median(iterations_to_tolerance(base.with_(protocol="block", tau=1), range(40), g))
        pw = np.median(iterations_to_tolerance(base, range(40), g))
        assert abs(blk - pw) / pw < 0.2


class TestCompare:
    def test_shared_graph_required(self):
        with pytest.raises(ValueError):
            compare_protocols([ExperimentConfig(graph_n=5), ExperimentConfig(graph_n=6)])

    def test_shared_sampling_identical(self):
        base = ExperimentConfig(graph_n=10, max_iters=300, epsilon=1e-30)
        a, b = compare_protocols([base, base.with_(protocol="mrk", beta=0.0)])
        np.testing.assert_allclose(a.rel_error_sq, b.rel_error_sq, rtol=1e-12)

    def test_accgossip_beats_pairwise_cycle100(self):
        base = ExperimentConfig(graph_n=100, max_iters=10**6)
        runs = compare_protocols([base, base.with_(protocol="accgossip"),
                                  base.with_(protocol="accgossip", acc_option=2)], seeds=range(10))
        its = [np.median([t.iterations for t in r]) for r in runs]
        assert its[1] < its[0] and its[2] < its[0]

    def test_mrk_vs_shift_register_grid(self):
        base = ExperimentConfig(graph_family="grid", graph_rows=10, graph_cols=10,
                                max_iters=3000, epsilon=1e-12)
        mrk, pmom = compare_protocols([base.with_(protocol="mrk", omega=1.2, beta=0.2),
                                       base.with_(protocol="shift-register", omega=1.2)],
                                      seeds=range(10))
        assert (np.median([t.terminal_error for t in mrk])
                <= np.median([t.terminal_error for t in pmom]))


class TestAveragingTime:
    def test_k3_bound(self):
        cfg = ExperimentConfig(graph_family="complete", graph_n=3, max_iters=1000)
        t = empirical_averaging_time(cfg, 0.1, range(200))
        assert 1 <= t <= math.ceil(3 * math.log(10) / math.log(2))

    def test_eps_range(self):
        with pytest.raises(ValueError):
            empirical_averaging_time(ExperimentConfig(), 1.5)


class TestCSV:
    def test_header_and_round_trip(self, tmp_path):
        t = run_experiment(ExperimentConfig(graph_n=8, max_iters=200, epsilon=1e-30))
        p = tmp_path / "t.csv"
        export_csv(t, p)
        raw = p.read_bytes()
        assert raw.startswith(b"k,rel_error_sq\n") and b"\r" not in raw
        k, e = read_trajectory_csv(p)
        np.testing.assert_array_equal(k, t.k)
        np.testing.assert_array_equal(e, t.rel_error_sq)

    def test_empty(self, tmp_path):
        p = tmp_path / "e.csv"
        export_csv(Trajectory(np.array([], dtype=np.int64), np.array([]), False, "budget"), p)
        assert p.read_text() == "k,rel_error_sq\n"

    def test_sweep(self, tmp_path):
        tab = SweepTable(np.array([1, 2]), np.array([10.0, 4.5]), np.array([10.0, 5.0]))
        p = tmp_path / "s.csv"
        export_csv(tab, p)
        assert p.read_text().splitlines()[0] == "tau,iterations,reference_l_over_tau"
        back = read_sweep_csv(p)
        np.testing.assert_array_equal(back.iterations, tab.iterations)

    def test_write_error_has_path(self, tmp_path):
        t = Trajectory(np.array([0]), np.array([1.0]), False, "budget")
        with pytest.raises(OSError, match="missing"):
            export_csv(t, tmp_path / "missing" / "t.csv")

    def test_wrong_header(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            read_trajectory_csv(p)


def test_run_seeds_order():
    cfg = ExperimentConfig(graph_n=10, max_iters=2000)
    par = run_seeds(cfg, [3, 1, 2], workers=3)
    seq = [run_experiment(cfg.with_(seed=s)) for s in [3, 1, 2]]
    for a, b in zip(par, seq):
        np.testing.assert_array_equal(a.rel_error_sq, b.rel_error_sq)
