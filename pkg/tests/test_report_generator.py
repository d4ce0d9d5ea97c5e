import math
import os
import shutil
import tempfile
import unittest

import numpy as np

from core.krylov_base import SolveReport, Termination
from core.recycle_core import prepare_recycle
from core.recycle_solvers import rcg
from core.report_generator import (
    CSV_COLUMNS,
    ConvergenceRecord,
    emit_report,
    read_report,
    records_to_frame,
    summary_table,
)
from utilities.error_handler import InvalidInput
from utilities.file_manager import FileManager


class TestReportGenerator(unittest.TestCase):
    """ Unit tests for convergence report generation """

    @classmethod
    def setUpClass(cls):
        """ Create sample records and a scratch output directory """
        cls.tmp_dir = tempfile.mkdtemp()
        cls.records = [
            ConvergenceRecord(system=0, shift=None, iter=[0, 1, 2], resnorm=[1.0, 0.1, 1e-9], matvecs=4,
                              recycle_dim=0, wall_ms=1.5, converged=True),
            ConvergenceRecord(system=1, shift=0.5, iter=[0, 1], resnorm=[2.0, 1e-10], matvecs=2,
                              recycle_dim=3, converged=True),
            ConvergenceRecord.failed(2, recycle_dim=3),
        ]

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmp_dir, ignore_errors=True)

    def test_csv_report(self):
        """ Ensure the CSV has one row per iteration and the fixed header """
        path = os.path.join(self.tmp_dir, "nested", "report.csv")
        emit_report(self.records, "csv", path)

        with open(path, encoding="utf-8") as f:
            header = f.readline().strip()
        self.assertEqual(header, ",".join(CSV_COLUMNS), "CSV header should be fixed")
        frame = FileManager.read_csv(path)
        self.assertEqual(len(frame), 5, "Failed records contribute no rows")
        self.assertEqual(frame["matvecs"].tolist(), [4, 4, 4, 2, 2], "matvecs repeats the record total")
        self.assertTrue(math.isnan(frame["shift"].iloc[0]), "A missing shift is written as an empty cell")
        self.assertEqual(frame["resnorm"].iloc[2], 1e-9, "Residuals are written at full precision")

    def test_empty_csv_has_header_only(self):
        path = os.path.join(self.tmp_dir, "empty.csv")
        emit_report([], "csv", path)
        with open(path, encoding="utf-8") as f:
            self.assertEqual(f.read().strip(), ",".join(CSV_COLUMNS))

    def test_json_report_round_trip(self):
        """ Ensure the JSON report reads back into equal records """
        path = os.path.join(self.tmp_dir, "report.json")
        emit_report(self.records, "json", path)
        loaded = read_report(path)

        self.assertEqual(loaded, self.records, "Records should survive the JSON report")
        self.assertEqual([r.converged for r in loaded], [True, True, False])
        self.assertNotIn("converged", FileManager.load_json(path)[0], "converged is derived, not stored")

    def test_unknown_format(self):
        with self.assertRaises(InvalidInput):
            emit_report(self.records, "pdf", os.path.join(self.tmp_dir, "report.pdf"))

    def test_summary_table(self):
        table = summary_table(self.records, title="runs")
        self.assertEqual(table.row_count, 3)
        self.assertEqual(table.title, "runs")

    def test_frame_from_no_records(self):
        frame = records_to_frame([])
        self.assertEqual(list(frame.columns), CSV_COLUMNS)
        self.assertTrue(frame.empty)


class TestConvergenceRecord(unittest.TestCase):
    """ Validation and conversion of single records """

    def test_from_report(self):
        report = SolveReport(x=np.zeros(3), resnorms=[3.0, 0.5, 1e-9], matvecs=4, iterations=2, converged=True,
                             termination=Termination.TOLERANCE, info={})
        rec = ConvergenceRecord.from_report(4, report, shift=1.0, recycle_dim=2)
        self.assertEqual(rec.iter, [0, 1, 2])
        self.assertEqual(rec.iterations, 2)
        self.assertEqual(rec.final_resnorm, 1e-9)
        self.assertEqual(rec.termination, "Tolerance")
        self.assertTrue(rec.converged)

    def test_iteration_count_comes_from_the_report(self):
        """ Ensure a history longer than iterations + 1 keeps only its tail """
        report = SolveReport(x=np.zeros(3), resnorms=[2.0, 1e-12], matvecs=2, iterations=0, converged=True,
                             termination=Termination.TOLERANCE, info={})
        rec = ConvergenceRecord.from_report(0, report)
        self.assertEqual(rec.iter, [0])
        self.assertEqual(rec.resnorm, [1e-12], "The residual after the correction is kept")
        self.assertEqual(rec.iterations, 0)

    def test_projection_only_solve_reports_zero_iterations(self):
        """ Ensure a right-hand side inside A span(U) is solved by the recycle correction alone """
        A = np.diag([1.0, 2.0, 3.0, 4.0])
        b = np.array([1.0, 2.0, 0.0, 0.0])
        report, _ = rcg(A, b, rs=prepare_recycle(A, np.eye(4)[:, :2]), tol=1e-10)
        rec = ConvergenceRecord.from_report(0, report, recycle_dim=2)

        self.assertEqual(report.iterations, 0)
        self.assertEqual(rec.iterations, 0, "No Krylov step was taken")
        self.assertEqual(len(rec.iter), 1)
        self.assertLessEqual(rec.final_resnorm, 1e-10 * np.linalg.norm(b))
        np.testing.assert_allclose(report.x, [1.0, 1.0, 0.0, 0.0], atol=1e-12)

    def test_failed_record(self):
        rec = ConvergenceRecord.failed(7)
        self.assertEqual(rec.termination, "Error")
        self.assertEqual(rec.iterations, 0)
        self.assertTrue(math.isnan(rec.final_resnorm))

    def test_validation(self):
        with self.assertRaises(InvalidInput):
            ConvergenceRecord(system=0, shift=None, iter=[0, 1], resnorm=[1.0], matvecs=1)
        with self.assertRaises(InvalidInput):
            ConvergenceRecord(system=0, shift=None, iter=[0, 0], resnorm=[1.0, 0.5], matvecs=1)
        with self.assertRaises(InvalidInput):
            ConvergenceRecord(system=0, shift=None, iter=[0, 1], resnorm=[1.0, float("inf")], matvecs=1)


if __name__ == "__main__":
    unittest.main()
