import unittest

import numpy as np

from core.krylov_base import (
    ArnoldiState,
    Termination,
    VectorWindow,
    arnoldi_extend,
    cg,
    check_arnoldi_state,
    fom,
    gmres,
    minres,
)
from core.sparse_io import aslinearoperator
from tests.fixtures import krylov_basis, laplacian_1d, min_residual, random_nonsymmetric, random_spd, random_symmetric
from utilities.error_handler import InvalidInput, NotPositiveDefinite, NotSymmetric


class TestArnoldi(unittest.TestCase):
    """ Arnoldi basis and Hessenberg relation """

    def test_relation_and_orthogonality(self):
        A = aslinearoperator(random_nonsymmetric(25, seed=11))
        state = ArnoldiState(25, 10, np.ones(25))
        while state.j < 10:
            arnoldi_extend(A, state, norm_a=A.norm_hint)
        ortho, relation = check_arnoldi_state(A, state, A.norm_hint)
        self.assertLess(ortho, 1e-12)
        self.assertLess(relation, 1e-12)
        self.assertEqual(state.H.shape, (11, 10))

    def test_happy_breakdown_is_flagged(self):
        A = aslinearoperator(np.diag([1.0, 2.0, 3.0, 4.0, 5.0]))
        start = np.array([1.0, 1.0, 0.0, 0.0, 0.0])
        state = ArnoldiState(5, 4, start)
        arnoldi_extend(A, state, A.norm_hint)
        arnoldi_extend(A, state, A.norm_hint)
        self.assertTrue(state.breakdown, "the Krylov space of a two-eigenvector start has dimension 2")
        with self.assertRaises(InvalidInput):
            arnoldi_extend(A, state, A.norm_hint)


class TestGmresFom(unittest.TestCase):
    """ Restarted GMRES and FOM """

    @classmethod
    def setUpClass(cls):
        cls.A = random_nonsymmetric(30, seed=1)
        cls.b = np.random.default_rng(1).standard_normal(30)

    def test_gmres_is_optimal_over_krylov_space(self):
        report = gmres(self.A, self.b, m=15, tol=1e-14, maxit=15)
        norm_b = np.linalg.norm(self.b)
        self.assertEqual(report.iterations, 15)
        for j in range(1, 16):
            best = min_residual(self.A, self.b, np.zeros(30), krylov_basis(self.A, self.b, j))
            self.assertAlmostEqual(report.resnorms[j] / norm_b, best / norm_b, delta=1e-8,
                                   msg=f"step {j} is not the Krylov minimum")

    def test_gmres_residuals_never_increase(self):
        report = gmres(self.A, self.b, m=8, tol=1e-10, maxit=200)
        self.assertTrue(np.all(np.diff(report.resnorms) <= 1e-12 * np.linalg.norm(self.b)))

    def test_restarted_gmres_converges(self):
        report = gmres(self.A, self.b, m=10, tol=1e-10, maxit=500)
        self.assertTrue(report.converged)
        self.assertIs(report.termination, Termination.TOLERANCE)
        true = np.linalg.norm(self.b - self.A @ report.x)
        self.assertAlmostEqual(report.final_resnorm, true, delta=1e-12 * np.linalg.norm(self.b))
        self.assertEqual(report.matvecs, report.iterations + report.info["cycles"] + 1,
                         "one residual per cycle plus the initial one")

    def test_fom_residual_is_orthogonal_to_krylov_space(self):
        report = fom(self.A, self.b, m=8, tol=1e-14, maxit=8)
        Q = krylov_basis(self.A, self.b, 8)
        r = self.b - self.A @ report.x
        self.assertLess(np.linalg.norm(Q.T @ r), 1e-10 * np.linalg.norm(self.b))

    def test_maxit_termination(self):
        report = gmres(self.A, self.b, m=5, tol=1e-14, maxit=7)
        self.assertFalse(report.converged)
        self.assertIs(report.termination, Termination.MAXITER)
        self.assertEqual(report.iterations, 7)

    def test_zero_rhs_returns_immediately(self):
        report = gmres(self.A, np.zeros(30))
        self.assertTrue(report.converged)
        self.assertEqual(report.iterations, 0)
        np.testing.assert_array_equal(report.x, np.zeros(30))

    def test_invariant_subspace_start(self):
        A = np.diag([1.0, 2.0, 3.0, 4.0, 5.0])
        b = np.array([1.0, 1.0, 0.0, 0.0, 0.0])
        report = gmres(A, b, m=5, tol=1e-12, maxit=5)
        self.assertTrue(report.converged)
        self.assertEqual(report.iterations, 2)
        np.testing.assert_allclose(report.x, [1.0, 0.5, 0.0, 0.0, 0.0], atol=1e-12)

    def test_debug_checks_pass_on_healthy_problem(self):
        report = gmres(self.A, self.b, m=10, tol=1e-8, maxit=100, debug_checks=True)
        self.assertTrue(report.converged)

    def test_invalid_arguments(self):
        with self.assertRaises(InvalidInput):
            gmres(self.A, self.b, m=0)
        with self.assertRaises(InvalidInput):
            gmres(self.A, self.b[:-1])
        with self.assertRaises(InvalidInput):
            gmres(self.A, self.b, x0=np.full(30, np.nan))
        with self.assertRaises(InvalidInput):
            gmres(self.A, self.b, tol=0.0)


class TestShortRecurrences(unittest.TestCase):
    """ MINRES and CG """

    @classmethod
    def setUpClass(cls):
        cls.S = random_symmetric(40, seed=3)
        cls.b = np.random.default_rng(3).standard_normal(40)

    def test_minres_matches_unrestarted_gmres(self):
        g = gmres(self.S, self.b, m=20, tol=1e-14, maxit=20)
        r = minres(self.S, self.b, tol=1e-14, maxit=20)
        count = min(len(g.resnorms), len(r.resnorms))
        gap = np.max(np.abs(np.subtract(g.resnorms[:count], r.resnorms[:count])))
        self.assertLess(gap, 1e-7 * np.linalg.norm(self.b))

    def test_minres_ritz_values_lie_in_spectrum(self):
        """ Ensure the Lanczos Ritz values match the dense tridiagonal and stay in the spectrum """
        report = minres(self.S, self.b, tol=1e-14, maxit=10)
        alphas, betas = report.info["alphas"], report.info["betas"]
        T = np.diag(alphas) + np.diag(betas[:-1], 1) + np.diag(betas[:-1], -1)
        ritz = report.info["ritz_values"]
        self.assertEqual(len(ritz), 10)
        np.testing.assert_allclose(ritz, np.linalg.eigvalsh(T), atol=1e-12)
        self.assertGreaterEqual(ritz.min(), -3.0 - 1e-8)
        self.assertLessEqual(ritz.max(), 5.0 + 1e-8)

    def test_minres_converges_on_indefinite_system(self):
        report = minres(self.S, self.b, tol=1e-10, maxit=200)
        self.assertTrue(report.converged)
        np.testing.assert_allclose(report.x, np.linalg.solve(self.S, self.b), atol=1e-7)

    def test_minres_rejects_nonsymmetric(self):
        with self.assertRaises(NotSymmetric):
            minres(random_nonsymmetric(10, seed=0), np.ones(10))

    def test_cg_solves_spd_system(self):
        A = random_spd(50, seed=5, cond=100.0)
        b = np.ones(50)
        report = cg(A, b, tol=1e-10, maxit=500)
        self.assertTrue(report.converged)
        self.assertEqual(report.matvecs, report.iterations + 2, "initial and final residual plus one per step")
        np.testing.assert_allclose(report.x, np.linalg.solve(A, b), rtol=1e-6, atol=1e-8)

    def test_fom_iterates_equal_cg_iterates(self):
        """ Ensure FOM and CG produce the same Galerkin iterate at every step on an SPD matrix """
        A = random_spd(20, seed=13, cond=100.0)
        b = np.random.default_rng(13).standard_normal(20)
        for steps in range(1, 13):
            galerkin = fom(A, b, m=steps, tol=1e-15, maxit=steps)
            conjugate = cg(A, b, tol=1e-15, maxit=steps)
            self.assertEqual(galerkin.iterations, conjugate.iterations)
            np.testing.assert_allclose(galerkin.x, conjugate.x, rtol=0.0, atol=1e-10 * np.linalg.norm(conjugate.x),
                                       err_msg=f"iterates differ after {steps} steps")

    def test_cg_rejects_negative_definite(self):
        with self.assertRaises(NotPositiveDefinite):
            cg(-laplacian_1d(10), np.ones(10))

    def test_warm_start_at_solution(self):
        A = random_spd(20, seed=6)
        b = np.ones(20)
        x_star = np.linalg.solve(A, b)
        report = cg(A, b, x0=x_star, tol=1e-8)
        self.assertEqual(report.iterations, 0)
        self.assertTrue(report.converged)


class TestVectorWindow(unittest.TestCase):

    def test_keeps_most_recent_entries(self):
        window = VectorWindow(2)
        for i in range(3):
            window.push(np.full(3, float(i)), np.full(3, 10.0 * i))
        self.assertTrue(window.is_full)
        np.testing.assert_array_equal(window.vectors()[0], [1.0, 2.0])
        np.testing.assert_array_equal(window.products()[0], [10.0, 20.0])
        window.clear()
        self.assertEqual(len(window), 0)
        self.assertIsNone(window.vectors())


if __name__ == "__main__":
    unittest.main()
