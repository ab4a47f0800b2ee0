"""Dense kernel wrappers: minimal-norm least squares, pseudoinverse,
eigendecomposition, Cholesky, linear solves."""

from __future__ import annotations

import numpy as np
import pytest

from parafit import (
    NotPositiveDefiniteError,
    RankDeficientWarning,
    SingularMatrixError,
)
from parafit.linalg import (
    cholesky_upper,
    eig_general,
    lstsq_minnorm,
    pinv,
    solve_dense,
)


class TestLstsqMinnorm:
    def test_identity_returns_rhs(self):
        b = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], dtype=np.complex128)
        x, rank = lstsq_minnorm(np.eye(3), b)
        np.testing.assert_allclose(x, b, atol=1e-14)
        assert rank == 3

    def test_overdetermined_consistent(self):
        a = np.array([[1.0], [1.0]])
        b = np.array([[0.0], [2.0]])
        x, rank = lstsq_minnorm(a, b)
        np.testing.assert_allclose(x, [[1.0]], atol=1e-14)
        assert rank == 1

    def test_rank_deficient_minimal_norm(self):
        # x1 + x2 = 2 has the minimal-norm solution on the diagonal
        a = np.array([[1.0, 1.0], [1.0, 1.0]])
        b = np.array([[2.0], [2.0]])
        x, rank = lstsq_minnorm(a, b)
        np.testing.assert_allclose(x, [[1.0], [1.0]], atol=1e-14)
        assert rank == 1

    def test_warns_on_deficiency_when_asked(self):
        a = np.array([[1.0, 1.0], [1.0, 1.0]])
        b = np.array([[2.0], [2.0]])
        with pytest.warns(RankDeficientWarning, match="rank 1 < 2"):
            lstsq_minnorm(a, b, warn_deficient=True)

    def test_silent_by_default(self):
        a = np.array([[1.0, 1.0], [1.0, 1.0]])
        b = np.array([[2.0], [2.0]])
        with np.testing.suppress_warnings() as sup:
            log = sup.record(RankDeficientWarning)
            lstsq_minnorm(a, b)
        assert len(log) == 0

    def test_residual_orthogonality(self):
        # A^H (A X - B) = 0 characterizes every least-squares solution
        for seed in range(5):
            rng = np.random.default_rng(seed)
            a = rng.standard_normal((7, 4)) + 1j * rng.standard_normal((7, 4))
            b = rng.standard_normal((7, 2)) + 1j * rng.standard_normal((7, 2))
            x, _ = lstsq_minnorm(a, b)
            gap = np.linalg.norm(a.conj().T @ (a @ x - b))
            assert gap <= 1e-10 * np.linalg.norm(a) * np.linalg.norm(b)

    def test_vector_rhs(self):
        a = np.array([[2.0, 0.0], [0.0, 4.0]])
        x, rank = lstsq_minnorm(a, np.array([2.0, 8.0]))
        np.testing.assert_allclose(x, [1.0, 2.0], atol=1e-14)
        assert rank == 2


class TestPinv:
    def test_diagonal(self):
        got = pinv(np.diag([2.0, 0.0]))
        np.testing.assert_allclose(got, np.diag([0.5, 0.0]), atol=1e-14)

    def test_unitary_gives_adjoint(self):
        rng = np.random.default_rng(3)
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
        np.testing.assert_allclose(pinv(q), q.conj().T, atol=1e-12)

    def test_full_column_rank_formula(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
        explicit = np.linalg.solve(a.conj().T @ a, a.conj().T)
        np.testing.assert_allclose(pinv(a), explicit, atol=1e-12)

    def test_involution(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
        np.testing.assert_allclose(pinv(pinv(a)), a, atol=1e-10)


class TestEigGeneral:
    def test_diagonal(self):
        vals, vecs = eig_general(np.diag([-1.0, -5.0]))
        np.testing.assert_allclose(sorted(vals.real), [-5.0, -1.0], atol=1e-14)
        assert vecs.shape == (2, 2)

    def test_symmetric_pair(self):
        vals, _ = eig_general(np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(sorted(vals.real), [-1.0, 1.0], atol=1e-14)

    def test_companion_roots(self):
        # z^2 + z - 6 = (z - 2)(z + 3)
        comp = np.array([[0.0, 6.0], [1.0, -1.0]])
        vals, _ = eig_general(comp)
        np.testing.assert_allclose(sorted(vals.real), [-3.0, 2.0], atol=1e-12)

    def test_spectrum_similarity_invariant(self):
        rng = np.random.default_rng(8)
        a = rng.standard_normal((5, 5))
        t = rng.standard_normal((5, 5)) + np.eye(5) * 3.0
        vals_a, _ = eig_general(a)
        vals_b, _ = eig_general(np.linalg.solve(t, a @ t))
        order = np.lexsort((vals_a.real, vals_a.imag))
        order_b = np.lexsort((vals_b.real, vals_b.imag))
        np.testing.assert_allclose(vals_a[order], vals_b[order_b], atol=1e-8)

    def test_eigenpairs_satisfy_definition(self):
        rng = np.random.default_rng(9)
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        vals, vecs = eig_general(a)
        np.testing.assert_allclose(a @ vecs, vecs * vals, atol=1e-10)


class TestCholeskyUpper:
    def test_identity(self):
        np.testing.assert_allclose(cholesky_upper(np.eye(3)), np.eye(3), atol=1e-14)

    def test_hand_factor(self):
        g = np.array([[1.0, 0.5], [0.5, 1.0 / 3.0]])
        r = cholesky_upper(g)
        expected = np.array([[1.0, 0.5], [0.0, np.sqrt(1.0 / 12.0)]])
        np.testing.assert_allclose(r, expected, atol=1e-12)

    def test_hermitian_complex_reconstruction(self):
        g = np.array([[1.0, 0.5j], [-0.5j, 1.0]])
        r = cholesky_upper(g)
        np.testing.assert_allclose(r.conj().T @ r, g, atol=1e-12)
        assert np.allclose(np.tril(r, -1), 0.0)

    def test_indefinite_rejected(self):
        with pytest.raises(NotPositiveDefiniteError):
            cholesky_upper(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_non_hermitian_rejected(self):
        with pytest.raises(NotPositiveDefiniteError):
            cholesky_upper(np.array([[1.0, 1.0], [0.0, 1.0]]))


class TestSolveDense:
    def test_identity(self):
        b = np.array([3.0, -1.0 + 2.0j])
        np.testing.assert_allclose(solve_dense(np.eye(2), b), b, atol=1e-14)

    def test_cramer_2x2(self):
        a = np.array([[2.0, 1.0], [1.0, 3.0]])
        b = np.array([5.0, 10.0])
        det = 2.0 * 3.0 - 1.0 * 1.0
        expected = np.array([(5.0 * 3.0 - 1.0 * 10.0) / det, (2.0 * 10.0 - 1.0 * 5.0) / det])
        np.testing.assert_allclose(solve_dense(a, b), expected, atol=1e-14)

    def test_hilbert_residual(self):
        n = 4
        h = 1.0 / (np.arange(n)[:, None] + np.arange(n)[None, :] + 1.0)
        b = h @ np.ones(n)
        x = solve_dense(h, b)
        assert np.linalg.norm(h @ x - b) <= 1e-8

    def test_singular_rejected(self):
        with pytest.raises(SingularMatrixError):
            solve_dense(np.array([[1.0, 2.0], [2.0, 4.0]]), np.array([1.0, 1.0]))
