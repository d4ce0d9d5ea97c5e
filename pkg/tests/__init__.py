"""
Tests package: unittest suites for the solver library, run with pytest.
"""

__all__ = [
    "test_dense_core",
    "test_sparse_io",
    "test_krylov_base",
    "test_recycle_core",
    "test_recycle_solvers",
    "test_selection",
    "test_oracle",
    "test_problem_generator",
    "test_report_generator",
    "test_sequence_runner",
    "test_verification",
    "test_config_loader",
    "test_error_handler",
    "test_logging_system",
    "test_main",
]
