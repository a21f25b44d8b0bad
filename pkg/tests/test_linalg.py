"""Contract tests for the complex Hermitian kernel."""

import numpy as np
import pytest

from helpers import crandn, random_hermitian, random_hermitian_pd
from mmsep import linalg as la
from mmsep.errors import NotPositiveDefinite, Singular


class TestCholesky:
    def test_identity(self):
        Q = la.cholesky(np.eye(3), ridge=0.0)
        np.testing.assert_allclose(Q, np.eye(3), atol=1e-14)

    def test_diagonal(self):
        Q = la.cholesky(np.diag([4.0, 9.0]), ridge=0.0)
        np.testing.assert_allclose(Q, np.diag([2.0, 3.0]), atol=1e-14)

    @pytest.mark.parametrize("seed", range(5))
    def test_multiply_back(self, seed):
        rng = np.random.default_rng(seed)
        H = random_hermitian_pd(rng, 5)
        Q = la.cholesky(H, ridge=0.0)
        assert np.allclose(np.triu(Q), Q)
        rel = np.linalg.norm(Q.conj().T @ Q - H) / np.linalg.norm(H)
        assert rel < 1e-10

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefinite):
            la.cholesky(np.diag([1.0, -1.0]), ridge=0.0)

    def test_ridge_restores_definiteness(self):
        # Ridge is relative to the mean diagonal.
        H = np.diag([1.0, 1.0, 0.0])
        Q = la.cholesky(H, ridge=1e-6)
        target = H + (1e-6 * 2.0 / 3.0) * np.eye(3)
        np.testing.assert_allclose(Q.conj().T @ Q, target, atol=1e-12)


class TestHermEig:
    def test_identity(self):
        w, U = la.herm_eig(np.eye(2))
        np.testing.assert_allclose(w, [1.0, 1.0])
        np.testing.assert_allclose(U.conj().T @ U, np.eye(2), atol=1e-12)

    def test_diagonal_permutation(self):
        w, U = la.herm_eig(np.diag([1.0, 3.0, 2.0]))
        np.testing.assert_allclose(w, [3.0, 2.0, 1.0])
        np.testing.assert_allclose(np.abs(U), np.eye(3)[:, [1, 2, 0]], atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_reconstruction(self, seed):
        rng = np.random.default_rng(100 + seed)
        H = random_hermitian(rng, 6)
        w, U = la.herm_eig(H)
        assert np.all(np.diff(w) <= 0)
        scale = np.linalg.norm(H)
        assert np.linalg.norm(H @ U - U * w) < 1e-9 * scale
        assert np.linalg.norm(U.conj().T @ U - np.eye(6)) < 1e-10
        np.testing.assert_allclose(U @ np.diag(w) @ U.conj().T, H, atol=1e-9 * scale)

    @pytest.mark.parametrize("seed", range(5))
    def test_trace_identity(self, seed):
        rng = np.random.default_rng(200 + seed)
        H = random_hermitian(rng, 5)
        w, _ = la.herm_eig(H)
        assert abs(w.sum() - np.trace(H).real) < 1e-9 * max(1.0, abs(np.trace(H).real))


class TestGenHermEig:
    def test_identity_pair(self):
        w, V = la.gen_herm_eig(np.eye(3), np.eye(3))
        np.testing.assert_allclose(w, np.ones(3), atol=1e-12)

    def test_diagonal_ratio(self):
        w, V = la.gen_herm_eig(np.diag([2.0, 8.0]), np.diag([1.0, 2.0]))
        np.testing.assert_allclose(w, [4.0, 2.0], atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_residual(self, seed):
        rng = np.random.default_rng(300 + seed)
        A = random_hermitian_pd(rng, 4)
        B = random_hermitian_pd(rng, 4)
        w, V = la.gen_herm_eig(A, B)
        for i in range(4):
            res = np.linalg.norm(A @ V[:, i] - w[i] * (B @ V[:, i]))
            assert res < 1e-9 * np.linalg.norm(A)
        # B-orthonormal eigenvectors
        np.testing.assert_allclose(V.conj().T @ B @ V, np.eye(4), atol=1e-10)

    @pytest.mark.parametrize("seed", range(5))
    def test_reciprocal_of_swapped_pair(self, seed):
        rng = np.random.default_rng(400 + seed)
        A = random_hermitian_pd(rng, 4)
        B = random_hermitian_pd(rng, 4)
        w_ab, _ = la.gen_herm_eig(A, B)
        w_ba, _ = la.gen_herm_eig(B, A)
        np.testing.assert_allclose(w_ab, 1.0 / w_ba[::-1], rtol=1e-8)

    def test_propagates_not_positive_definite(self):
        with pytest.raises(NotPositiveDefinite):
            la.gen_herm_eig(np.eye(2), np.diag([1.0, -1.0]))


class TestSolve:
    def test_identity(self):
        rng = np.random.default_rng(0)
        B = crandn(rng, 3, 2)
        np.testing.assert_allclose(la.solve(np.eye(3), B), B, atol=1e-14)

    def test_diagonal(self):
        X = la.solve(np.diag([2.0, 4.0]), np.eye(2))
        np.testing.assert_allclose(X, np.diag([0.5, 0.25]), atol=1e-14)

    @pytest.mark.parametrize("seed", range(5))
    def test_multiply_back(self, seed):
        rng = np.random.default_rng(500 + seed)
        A = crandn(rng, 6, 6) + 2 * np.eye(6)
        B = crandn(rng, 6, 3)
        X = la.solve(A, B)
        assert np.linalg.norm(A @ X - B) / np.linalg.norm(B) < 1e-9

    def test_singular(self):
        with pytest.raises(Singular):
            la.solve(np.array([[1.0, 1.0], [1.0, 1.0]]), np.eye(2))


def test_add_ridge_batched():
    rng = np.random.default_rng(7)
    H = np.stack([random_hermitian_pd(rng, 3), 2 * np.eye(3)])
    out = la.add_ridge(H, rel=0.5)
    np.testing.assert_allclose(
        out[1], 2 * np.eye(3) + 0.5 * 2.0 * np.eye(3), atol=1e-12
    )
    np.testing.assert_allclose(
        out[0], H[0] + 0.5 * (np.trace(H[0]).real / 3) * np.eye(3), atol=1e-12
    )
