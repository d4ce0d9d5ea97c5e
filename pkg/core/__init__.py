"""
Core package: sparse and dense kernels, Krylov solvers with subspace recycling,
sequence manifests and the command line.
"""

__all__ = [
    "dense_core",  # Small dense QR, Givens, eigen and SVD kernels
    "sparse_io",  # CSR matrices, linear operators, Matrix Market I/O
    "krylov_base",  # Arnoldi, GMRES, FOM, MINRES, CG
    "recycle_core",  # Recycle spaces, projections, invariant checks
    "recycle_solvers",  # GCRO-DR, rFOM, rMINRES, rCG, shifted families
    "oracle",  # Dense brute-force references for testing
    "problem_generator",  # Perturbed Laplacian and banded sequences
    "manifest",  # Sequence manifest parsing and system loading
    "sequence_runner",  # Solves a manifest while carrying the recycle space
    "report_generator",  # Convergence records, CSV/JSON reports
    "verification",  # Invariant suite behind `recyklos verify`
    "main",  # Command line entry point
]
