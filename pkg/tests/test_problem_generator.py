import json
import os
import tempfile
import unittest

import numpy as np

from core.problem_generator import GeneratorSpec, generate_sequence, write_sequence
from core.sparse_io import read_matrix_market, read_vector
from tests.fixtures import laplacian_2d
from utilities.error_handler import InvalidInput


class TestGeneratorSpec(unittest.TestCase):

    def test_validation(self):
        with self.assertRaises(InvalidInput):
            GeneratorSpec("laplacian2d", n=10)  # not a perfect square
        with self.assertRaises(InvalidInput):
            GeneratorSpec("spiral", n=16)
        with self.assertRaises(InvalidInput):
            GeneratorSpec("diag_perturb", n=3)
        with self.assertRaises(InvalidInput):
            GeneratorSpec("diag_perturb", n=16, count=0)
        with self.assertRaises(InvalidInput):
            GeneratorSpec("diag_perturb", n=16, perturbation=float("nan"))
        with self.assertRaises(InvalidInput):
            GeneratorSpec.from_dict({"n": 16})

    def test_dict_round_trip(self):
        spec = GeneratorSpec("laplacian2d", n=25, count=3, perturbation=0.1, seed=4)
        self.assertEqual(GeneratorSpec.from_dict(spec.to_dict()), spec)


class TestLaplacianSequence(unittest.TestCase):
    """ Perturbed 2D Laplacians """

    @classmethod
    def setUpClass(cls):
        cls.spec = GeneratorSpec("laplacian2d", n=36, count=4, perturbation=0.05, seed=7)
        cls.systems = generate_sequence(cls.spec)

    def test_first_system_is_already_perturbed(self):
        """ Ensure system 0 is a nearby Laplacian rather than the plain one """
        first, plain = self.systems[0].matrix.to_dense(), laplacian_2d(6)
        self.assertGreater(np.abs(first - plain).max(), 0.0, "the unit coefficient field should be perturbed")
        np.testing.assert_array_less(np.abs(first - plain), self.spec.perturbation * np.abs(plain) + 1e-15)
        np.testing.assert_array_equal(self.systems[0].rhs, np.ones(36))

    def test_zero_perturbation_repeats_the_plain_laplacian(self):
        systems = generate_sequence(GeneratorSpec("laplacian2d", n=9, count=3, perturbation=0.0))
        for system in systems:
            np.testing.assert_array_equal(system.matrix.to_dense(), laplacian_2d(3))
            self.assertGreater(np.linalg.eigvalsh(system.matrix.to_dense()).min(), 0.0)

    def test_systems_are_spd(self):
        for system in self.systems:
            M = system.matrix.to_dense()
            np.testing.assert_allclose(M, M.T)
            self.assertGreater(np.linalg.eigvalsh(M).min(), 0.0)
            self.assertTrue(system.spd)

    def test_perturbation_is_bounded(self):
        for prev, nxt in zip(self.systems, self.systems[1:]):
            A, B = prev.matrix.to_dense(), nxt.matrix.to_dense()
            delta = np.linalg.norm(B - A)
            self.assertGreater(delta, 0.0)
            self.assertLessEqual(delta, self.spec.perturbation * np.linalg.norm(A) * (1 + 1e-12))

    def test_same_seed_same_sequence(self):
        again = generate_sequence(self.spec.to_dict())
        for a, b in zip(self.systems, again):
            self.assertEqual(a.matrix, b.matrix)
        other = generate_sequence(GeneratorSpec("laplacian2d", n=36, count=4, perturbation=0.05, seed=8))
        self.assertNotEqual(self.systems[-1].matrix, other[-1].matrix)


class TestDiagPerturbSequence(unittest.TestCase):

    def test_diagonally_dominant_and_local(self):
        spec = GeneratorSpec("diag_perturb", n=50, count=3, perturbation=0.2, seed=1)
        systems = generate_sequence(spec)
        for system in systems:
            M = system.matrix.to_dense()
            np.testing.assert_allclose(M, M.T)
            off = np.abs(M).sum(axis=1) - np.abs(np.diag(M))
            self.assertTrue(np.all(np.diag(M) > off), "strict diagonal dominance")
        changed = np.abs(systems[1].matrix.to_dense() - systems[0].matrix.to_dense()) > 0
        off_diagonal = changed & ~np.eye(50, dtype=bool)
        rows = np.nonzero(off_diagonal.any(axis=1))[0]
        if rows.size:
            self.assertLessEqual(rows.max() - rows.min(), 5, "edits stay inside one band of n // 10 rows")


class TestWriteSequence(unittest.TestCase):

    def test_files_and_manifest(self):
        spec = GeneratorSpec("laplacian2d", n=16, count=2, perturbation=0.1, seed=3)
        with tempfile.TemporaryDirectory() as tmp:
            path = write_sequence(spec, tmp, solver="rminres", selector={"kind": "HarmonicRitz", "k": 2})
            with open(path, encoding="utf-8") as f:
                manifest = json.load(f)
            self.assertEqual(len(manifest["systems"]), 2)
            self.assertEqual(manifest["solver"], {"name": "rminres"})
            self.assertEqual(manifest["selector"]["kind"], "HarmonicRitz")
            self.assertEqual(manifest["generated_by"], spec.to_dict())
            entry = manifest["systems"][1]
            A = read_matrix_market(os.path.join(tmp, entry["matrix"]))
            self.assertEqual(A, generate_sequence(spec)[1].matrix)
            np.testing.assert_array_equal(read_vector(os.path.join(tmp, entry["rhs"])), np.ones(16))


if __name__ == "__main__":
    unittest.main()
