import unittest

import numpy as np
import scipy.linalg

from core.recycle_core import prepare_recycle
from core.sparse_io import aslinearoperator
from core.verification import ANGLE_TOL, SHIFTS, check_shift_invariance, verify_system
from tests.fixtures import projected_krylov_basis, random_nonsymmetric, random_symmetric


class TestShiftInvariance(unittest.TestCase):
    """ K_5((I - Q) A, v) does not change when A is shifted, for v orthogonal to C """

    @classmethod
    def setUpClass(cls):
        cls.A = random_symmetric(64, seed=59)
        cls.rs = prepare_recycle(cls.A, np.random.default_rng(59).standard_normal((64, 4)))

    def test_projected_krylov_spaces_coincide(self):
        """ Ensure the principal angles stay below 1e-8 for every shift """
        v = np.random.default_rng(60).standard_normal(64)
        v -= self.rs.C @ (self.rs.C.T @ v)
        base = projected_krylov_basis(self.A, self.rs.C, v, 5)
        self.assertEqual(base.shape[1], 5)
        for gamma in (0.1, 1.0, 10.0):
            shifted = projected_krylov_basis(self.A + gamma * np.eye(64), self.rs.C, v, 5)
            angles = scipy.linalg.subspace_angles(base, shifted)
            self.assertLessEqual(angles.max(), 1e-8, f"shift {gamma}")

    def test_check_reports_the_largest_angle(self):
        result = check_shift_invariance(3, aslinearoperator(self.A, symmetric=True), self.rs, seed=61, steps=5)
        self.assertEqual(result.name, "shift_invariance")
        self.assertEqual(result.system, 3)
        self.assertTrue(result.passed, result.detail)
        self.assertLessEqual(result.value, ANGLE_TOL)
        self.assertEqual(result.detail, f"shifts {list(SHIFTS)}")


class TestVerifySystem(unittest.TestCase):
    """ The invariant suite on single systems """

    def test_symmetric_system_runs_every_check(self):
        A = random_symmetric(30, seed=67)
        b = np.random.default_rng(67).standard_normal(30)
        results = verify_system(0, A, b, symmetric=True, steps=10, k=3)
        names = [r.name for r in results]
        self.assertEqual(names, ["gmres_optimality", "arnoldi_relation", "recycle_invariants", "residual_identity",
                                 "minres_equals_gmres", "shift_invariance"])
        self.assertTrue(all(r.passed for r in results), [r.to_dict() for r in results if not r.passed])

    def test_oracle_limits_come_from_the_config(self):
        """ Ensure oracle.dense_max and oracle.max_basis bound the brute-force checks """
        A = random_nonsymmetric(30, seed=71)
        b = np.ones(30)
        small = verify_system(0, A, b, steps=10, k=2, config={"oracle": {"dense_max": 20}})
        self.assertNotIn("gmres_optimality", [r.name for r in small], "30 > dense_max skips the oracle check")

        capped = verify_system(0, A, b, steps=10, k=2, config={"oracle": {"max_basis": 4}})
        optimality = next(r for r in capped if r.name == "gmres_optimality")
        self.assertTrue(optimality.passed)
        self.assertEqual(optimality.detail, "4 iterations", "steps are capped by max_basis")


if __name__ == "__main__":
    unittest.main()
