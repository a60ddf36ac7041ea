import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gossiplab.graph import Graph, incidence_matrix, laplacian, make_complete, make_cycle
from gossiplab.linalg import (InconsistentSystemError, NodeWeights, lambda_max, lambda_min_plus,
                              project_solution_set, pseudo_inverse, sym_eigen, weighted_norm_sq)

METHODS = ["jacobi", "lapack", "auto"]


@pytest.mark.parametrize("method", METHODS)
class TestSymEigen:
    def test_identity(self, method):
        np.testing.assert_allclose(sym_eigen(np.eye(3), method).values, [1, 1, 1])

    def test_k3(self, method):
        np.testing.assert_allclose(sym_eigen(laplacian(make_complete(3)), method).values,
                                   [0, 3, 3], atol=1e-12)

    def test_c4(self, method):
        np.testing.assert_allclose(sym_eigen(laplacian(make_cycle(4)), method).values,
                                   [0, 2, 2, 4], atol=1e-12)

    def test_reconstruction(self, method, rng):
        X = rng.standard_normal((9, 9))
        M = X + X.T
        vals, vecs = sym_eigen(M, method)
        assert np.all(np.diff(vals) >= 0)
        np.testing.assert_allclose(vecs @ np.diag(vals) @ vecs.T, M, atol=1e-10)
        np.testing.assert_allclose(vecs.T @ vecs, np.eye(9), atol=1e-10)


def test_rejects_nonsymmetric():
    with pytest.raises(ValueError, match="symmetric"):
        sym_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_rejects_unknown_method():
    with pytest.raises(ValueError):
        sym_eigen(np.eye(2), "qr")


class TestLambdaMinPlus:
    def test_k3(self):
        assert lambda_min_plus(laplacian(make_complete(3))) == pytest.approx(3.0, abs=1e-12)

    @pytest.mark.parametrize("n", [5, 10, 30, 60])
    def test_cycle_circulant(self, n):
        expected = 2.0 - 2.0 * math.cos(2.0 * math.pi / n)
        assert lambda_min_plus(laplacian(make_cycle(n))) == pytest.approx(expected, abs=1e-9)

    def test_cycle30_value(self):
        # circulant oracle: 2 - 2 cos(2 pi / 30)
        assert lambda_min_plus(laplacian(make_cycle(30))) == pytest.approx(0.0437047985, abs=1e-9)

    def test_zero_matrix(self):
        with pytest.raises(ValueError):
            lambda_min_plus(np.zeros((3, 3)))

    def test_lambda_max(self):
        assert lambda_max(laplacian(make_cycle(4))) == pytest.approx(4.0)


class TestPseudoInverse:
    def test_diag(self):
        np.testing.assert_allclose(pseudo_inverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))

    def test_penrose_identity(self):
        L = laplacian(make_complete(3))
        np.testing.assert_allclose(L @ pseudo_inverse(L) @ L, L, atol=1e-10)

    def test_projector(self, rng):
        u = rng.standard_normal(5)
        u /= np.linalg.norm(u)
        P = np.outer(u, u)
        np.testing.assert_allclose(pseudo_inverse(P), P, atol=1e-12)

    def test_matches_numpy(self, rng):
        X = rng.standard_normal((6, 3))
        M = X @ X.T
        np.testing.assert_allclose(pseudo_inverse(M), np.linalg.pinv(M, hermitian=True), atol=1e-9)


class TestProjection:
    def test_plain_average(self, rng):
        g = make_cycle(6)
        c = rng.standard_normal(6)
        np.testing.assert_allclose(project_solution_set(c, incidence_matrix(g)),
                                   np.full(6, c.mean()), atol=1e-12)

    def test_weighted_mean(self):
        g = Graph(2, ((0, 1),))
        z = project_solution_set([0.0, 4.0], incidence_matrix(g), w=[1.0, 3.0])
        np.testing.assert_allclose(z, [3.0, 3.0], atol=1e-12)

    def test_idempotent(self):
        g = make_cycle(5)
        x = np.full(5, 2.5)
        np.testing.assert_allclose(project_solution_set(x, incidence_matrix(g)), x, atol=1e-14)

    def test_inconsistent(self):
        A = np.array([[1.0, 0.0], [1.0, 0.0]])
        with pytest.raises(InconsistentSystemError):
            project_solution_set([0.0, 0.0], A, b=[1.0, 2.0])


class TestWeights:
    def test_norm(self):
        assert weighted_norm_sq([1.0, 2.0], [3.0, 0.5]) == pytest.approx(5.0)
        assert weighted_norm_sq([0.0, 0.0], [3.0, 0.5]) == 0.0

    @pytest.mark.parametrize("bad", [[1.0, 0.0], [1.0, -2.0], [np.inf, 1.0], []])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            NodeWeights(np.array(bad))

    def test_immutable(self):
        w = NodeWeights(np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            w.w[0] = 5.0


@settings(max_examples=40, deadline=None)
@given(arrays(np.int64, (6, 4), elements=st.integers(-3, 3)))
def test_projection_lands_on_nullspace(X):
    # integer entries keep the numerical rank unambiguous
    A = X.T.astype(float)  # 4 x 6, b = 0 always consistent
    x = np.arange(6, dtype=float)
    z = project_solution_set(x, A)
    assert np.max(np.abs(A @ z)) <= 1e-8 * max(1.0, np.abs(A).max() * 6)
    # orthogonality: x - z lies in the row space
    r = x - z
    np.testing.assert_allclose(A.T @ (np.linalg.pinv(A.T) @ r), r, atol=1e-6)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (5, 5), elements=st.floats(-10, 10)))
def test_jacobi_matches_lapack(X):
    M = X + X.T
    np.testing.assert_allclose(sym_eigen(M, "jacobi").values, np.linalg.eigvalsh(M),
                               atol=1e-9 * max(1.0, np.abs(M).max()))
