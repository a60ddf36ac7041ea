import math

import numpy as np
import pytest
import scipy.linalg

from gossiplab.accel import (AccState, compute_nu, pencil_max, schedule_option1, schedule_option2,
                             step_accgossip)
from gossiplab.graph import Graph, incidence_matrix, make_cycle, make_grid2d, make_path, make_rgg
from gossiplab.linalg import lambda_min_plus


def nu_oracle(A):
    """Generalized eigenproblem restricted to the complement of the all-ones vector."""
    m, n = A.shape
    basis, _ = np.linalg.qr(np.column_stack([np.ones(n), np.eye(n)[:, :n - 1]]))
    U = basis[:, 1:]
    G = A.T @ A
    lev = np.array([a @ np.linalg.pinv(G) @ a for a in A])
    M1 = sum(l * np.outer(a, a) for l, a in zip(lev, A))
    return scipy.linalg.eigh(U.T @ M1 @ U, U.T @ (G / m) @ U, eigvals_only=True)[-1]


class TestOption1:
    def test_first_entries(self):
        s = schedule_option1(3, 0.5)
        assert s.gamma[0] == pytest.approx(1 / 3, abs=1e-15)
        assert s.beta[0] == pytest.approx(17 / 18, abs=1e-15)
        assert s.alpha[0] == 1.0

    def test_recursion_holds(self):
        m, lam = 10, 0.05
        s = schedule_option1(m, lam, K=200)
        g, gp = s.gamma[1:], s.gamma[:-1]
        np.testing.assert_allclose(g * g - g / m, (1 - g * lam / m) * gp * gp, atol=1e-13)

    def test_ranges_cycle10(self):
        g = make_cycle(10)
        A = incidence_matrix(g, normalized=True)
        lam = lambda_min_plus(A.T @ A)
        s = schedule_option1(g.m, lam)
        assert np.all((s.beta > 0) & (s.beta < 1))
        assert np.all((s.alpha > 0) & (s.alpha <= 1))
        assert s.gamma[-1] == pytest.approx(1 / math.sqrt(lam), rel=1e-9)

    def test_clamped_lookup(self):
        s = schedule_option1(5, 0.2)
        assert s.at(10**9) == s.at(s.alpha.size - 1)
        a, b, c = s.arrays(s.alpha.size - 2, 5)
        assert a.size == 5 and a[-1] == s.alpha[-1]

    @pytest.mark.parametrize("lam", [0.0, -1.0])
    def test_nonpositive_lambda(self, lam):
        with pytest.raises(ValueError):
            schedule_option1(4, lam)

    def test_lambda_too_large(self):
        with pytest.raises(ValueError):
            schedule_option1(2, 4.0)


class TestOption2:
    def test_perfect_conditioning(self):
        s = schedule_option2(1.0, 1.0)
        assert s.at(0) == pytest.approx((0.5, 0.0, 1.0))

    def test_cycle10_constants(self):
        g = make_cycle(10)
        A = incidence_matrix(g, normalized=True)
        lw = lambda_min_plus(A.T @ A / g.m)
        a, b, c = schedule_option2(lw, g.m).at(7)
        assert b == pytest.approx(1 - math.sqrt(lw / g.m))
        assert c == pytest.approx(1 / math.sqrt(lw * g.m))
        assert a == pytest.approx(1 / (1 + c * g.m))
        assert 0 < a < 1

    @pytest.mark.parametrize("args", [(0.0, 2.0), (0.1, 0.5), (-1.0, 3.0)])
    def test_rejects(self, args):
        with pytest.raises(ValueError):
            schedule_option2(*args)


class TestNu:
    def test_single_edge(self):
        A = incidence_matrix(Graph(2, ((0, 1),)), normalized=True)
        assert compute_nu(A) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("g", [make_cycle(10), make_cycle(30), make_grid2d(4, 4),
                                   make_rgg(50, seed=0), make_path(5)])
    def test_oracle_and_bounds(self, g):
        A = incidence_matrix(g, normalized=True)
        nu = compute_nu(A)
        assert nu == pytest.approx(nu_oracle(A), rel=1e-9)
        upper = min(g.m, 1 / lambda_min_plus(A.T @ A / g.m))
        assert 1 - 1e-9 <= nu <= upper * (1 + 1e-9)

    def test_cycle10_value(self):
        # frozen from the restricted generalized eigenproblem
        assert compute_nu(incidence_matrix(make_cycle(10), normalized=True)) == pytest.approx(9.0, rel=1e-10)

    def test_needs_unit_rows(self):
        with pytest.raises(ValueError, match="unit"):
            compute_nu(incidence_matrix(make_cycle(5)))

    def test_pencil_identity(self):
        C = np.diag([2.0, 1.0, 0.0])
        N = np.diag([4.0, 3.0, 100.0])
        # null direction of C is excluded
        assert pencil_max(N, C) == pytest.approx(3.0)


class TestStep:
    def test_consensus_fixed(self):
        s = AccState.initial(np.full(4, 1.5))
        out = step_accgossip(s, (1, 2), schedule_option1(4, 0.3))
        np.testing.assert_array_equal(out.x, s.x)
        np.testing.assert_array_equal(out.v, s.v)

    def test_collapse(self, rng):
        from gossiplab.accel import AccSchedule
        sched = AccSchedule(0, np.array([1.0]), np.array([1.0]), np.array([0.0]))
        x, v = rng.standard_normal(5), rng.standard_normal(5)
        out = step_accgossip(AccState(x, v), (0, 3), sched)
        np.testing.assert_array_equal(out.v, v)
        exp = v.copy()
        exp[[0, 3]] = (v[0] + v[3]) / 2
        np.testing.assert_allclose(out.x, exp, atol=1e-15)

    def test_matrix_form(self, rng):
        g = make_grid2d(3, 3)
        A = incidence_matrix(g, normalized=True)
        sched = schedule_option1(g.m, lambda_min_plus(A.T @ A))
        s = AccState(rng.standard_normal(g.n), rng.standard_normal(g.n), 0)
        for t in range(30):
            e = int(rng.integers(g.m))
            al, be, ga = sched.at(s.k)
            a = A[e]
            y = al * s.v + (1 - al) * s.x
            r = a @ y
            x_ref = y - r * a
            v_ref = be * s.v + (1 - be) * y - ga * r * a
            s = step_accgossip(s, g.edges[e], sched)
            np.testing.assert_allclose(s.x, x_ref, atol=1e-12)
            np.testing.assert_allclose(s.v, v_ref, atol=1e-12)
