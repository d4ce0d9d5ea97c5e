import unittest

import numpy as np

from core.dense_core import (
    GivensLeastSquares,
    as_finite_matrix,
    generalized_eig_small,
    hessenberg_lstsq,
    small_eig_general,
    svd_small,
    sym_tridiag_eig,
    thin_qr,
)
from utilities.error_handler import IllConditionedPencil, InvalidInput


class TestThinQR(unittest.TestCase):
    """ Thin QR with rank dropping """

    @classmethod
    def setUpClass(cls):
        cls.M = np.random.default_rng(3).standard_normal((8, 4))

    def test_full_rank_factorization(self):
        qr = thin_qr(self.M)
        self.assertEqual(qr.rank, 4)
        np.testing.assert_allclose(qr.q.T @ qr.q, np.eye(4), atol=1e-13)
        np.testing.assert_allclose(qr.q @ qr.r, self.M, atol=1e-12)
        self.assertTrue(np.all(np.diag(qr.r[:, qr.kept]) > 0), "triangular block should have a positive diagonal")

    def test_dependent_column_is_dropped(self):
        M = np.column_stack([self.M[:, :3], self.M[:, 0] + self.M[:, 1]])
        qr = thin_qr(M)
        self.assertEqual(qr.rank, 3, "a sum of two columns adds no rank")
        self.assertEqual(qr.q.shape, (8, 3))
        np.testing.assert_allclose(qr.q @ qr.r, M, atol=1e-12)

    def test_zero_and_empty_input(self):
        self.assertEqual(thin_qr(np.zeros((5, 2))).rank, 0)
        empty = thin_qr(np.zeros((5, 0)))
        self.assertEqual(empty.q.shape, (5, 0))

    def test_rejects_non_finite(self):
        with self.assertRaises(InvalidInput):
            thin_qr(np.array([[1.0, np.nan], [0.0, 1.0]]))
        with self.assertRaises(InvalidInput):
            as_finite_matrix(np.array([np.inf, 1.0]))


class TestHessenbergLeastSquares(unittest.TestCase):
    """ Givens-based least squares against numpy's lstsq """

    @classmethod
    def setUpClass(cls):
        generator = np.random.default_rng(5)
        cls.H = np.triu(generator.standard_normal((7, 6)), k=-1)
        cls.rhs = generator.standard_normal(7)

    def test_matches_dense_lstsq(self):
        y, resnorm = hessenberg_lstsq(self.H, self.rhs)
        y_ref = np.linalg.lstsq(self.H, self.rhs, rcond=None)[0]
        np.testing.assert_allclose(y, y_ref, atol=1e-11)
        self.assertAlmostEqual(resnorm, np.linalg.norm(self.H @ y_ref - self.rhs), places=11)

    def test_incremental_residuals(self):
        solver = GivensLeastSquares(self.rhs, 6)
        for j in range(6):
            resnorm = solver.add_column(self.H[: j + 2, j])
            H_j = self.H[: j + 2, : j + 1]
            y_ref = np.linalg.lstsq(H_j, self.rhs[: j + 2], rcond=None)[0]
            expected = np.linalg.norm(np.concatenate([self.rhs[: j + 2] - H_j @ y_ref, self.rhs[j + 2:]]))
            self.assertAlmostEqual(resnorm, expected, places=11, msg=f"residual mismatch after column {j}")

    def test_rejects_non_hessenberg(self):
        H = self.H.copy()
        H[5, 0] = 1.0
        with self.assertRaises(InvalidInput):
            hessenberg_lstsq(H, self.rhs)


class TestEigenKernels(unittest.TestCase):
    """ Small symmetric, general and generalized eigenproblems """

    def test_tridiagonal_matches_dense(self):
        d = np.array([2.0, 3.0, 1.0, 4.0])
        e = np.array([0.5, -1.0, 0.25])
        values, vectors = sym_tridiag_eig(d, e)
        T = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
        np.testing.assert_allclose(values, np.linalg.eigvalsh(T), atol=1e-12)
        np.testing.assert_allclose(T @ vectors, vectors * values, atol=1e-12)

    def test_single_entry_tridiagonal(self):
        values, vectors = sym_tridiag_eig([3.0], [])
        self.assertEqual(values.tolist(), [3.0])
        self.assertEqual(vectors.shape, (1, 1))

    def test_complex_pair_returns_real_plane(self):
        M = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -2.0], [0.0, 2.0, 0.0]])
        pairs = small_eig_general(M)
        self.assertEqual(len(pairs), 2, "one real eigenvalue and one conjugate pair")
        self.assertTrue(pairs[0].is_real)
        self.assertAlmostEqual(pairs[0].value.real, 1.0)
        plane = pairs[1].vector
        self.assertEqual(plane.shape, (3, 2))
        np.testing.assert_allclose(plane.T @ plane, np.eye(2), atol=1e-12)
        # the plane is invariant under M
        np.testing.assert_allclose(M @ plane - plane @ (plane.T @ M @ plane), 0.0, atol=1e-12)

    def test_generalized_pencil(self):
        A = np.diag([2.0, 6.0])
        B = np.diag([1.0, 2.0])
        values = sorted(p.value.real for p in generalized_eig_small(A, B))
        np.testing.assert_allclose(values, [2.0, 3.0])

    def test_singular_pencil_is_rejected(self):
        with self.assertRaises(IllConditionedPencil):
            generalized_eig_small(np.eye(2), np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_svd_reconstruction(self):
        M = np.random.default_rng(2).standard_normal((6, 3))
        left, sing, right = svd_small(M)
        np.testing.assert_allclose(left @ np.diag(sing) @ right.T, M, atol=1e-12)
        self.assertTrue(np.all(np.diff(sing) <= 0), "singular values should be nonincreasing")


if __name__ == "__main__":
    unittest.main()
