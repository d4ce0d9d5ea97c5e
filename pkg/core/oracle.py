"""
Brute-force references for the optimality and equivalence checks.

Everything here works on densified operators and plain LAPACK calls; no
least-squares or Arnoldi routine of the solvers is reused (thin_qr is the only
shared kernel).
"""
import logging

import numpy as np
import scipy.linalg

from core.dense_core import DEFAULT_RANK_TOL, as_finite_matrix, thin_qr
from core.sparse_io import CsrMatrix, LinearOperator, aslinearoperator
from utilities.config_loader import DEFAULT_CONFIG
from utilities.error_handler import InvalidInput, SingularMatrix

logger = logging.getLogger(__name__)

DENSE_MAX = DEFAULT_CONFIG["oracle"]["dense_max"]
MAX_BASIS = DEFAULT_CONFIG["oracle"]["max_basis"]


def densify(op, dense_max=DENSE_MAX):
    """ Dense copy of an operator (n <= dense_max). """
    if isinstance(op, np.ndarray):
        return as_finite_matrix(op, "operator")
    if isinstance(op, CsrMatrix):
        if op.nrows > dense_max:
            raise InvalidInput(f"oracle limited to n <= {dense_max}, got {op.nrows}")
        return op.to_dense()
    op = op if isinstance(op, LinearOperator) else aslinearoperator(op)
    if op.dim > dense_max:
        raise InvalidInput(f"oracle limited to n <= {dense_max}, got {op.dim}")
    return op.matmat(np.eye(op.dim))


def dense_solve(A, b, dense_max=DENSE_MAX):
    """
    LU solve with partial pivoting.
    :return: (x, info) where info holds the residual, the condition estimate and
             the bound 1e-10 * cond * ||b|| the residual is expected to satisfy.
    :raises SingularMatrix: when A is singular to working precision.
    """
    M = densify(A, dense_max)
    b = np.asarray(b, dtype=np.float64).ravel()
    if M.shape[0] > dense_max:
        raise InvalidInput(f"oracle limited to n <= {dense_max}, got {M.shape[0]}")
    try:
        lu, piv = scipy.linalg.lu_factor(M, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as e:
        raise SingularMatrix(f"LU factorization failed: {e}") from e
    if np.any(np.diag(lu) == 0.0):
        raise SingularMatrix("matrix is singular to working precision")
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > 1.0 / np.finfo(float).eps:
        raise SingularMatrix(f"matrix is singular to working precision (cond {cond:.3e})")
    x = scipy.linalg.lu_solve((lu, piv), b)
    residual = float(np.linalg.norm(M @ x - b))
    return x, {"residual": residual, "cond": cond, "bound": 1e-10 * cond * max(float(np.linalg.norm(b)), 1.0)}


def _basis(W, n, max_basis):
    W = np.zeros((n, 0)) if W is None else as_finite_matrix(W, "basis")
    if W.shape[0] != n:
        raise InvalidInput(f"basis has {W.shape[0]} rows, expected {n}")
    if W.shape[1] > max_basis:
        raise InvalidInput(f"oracle basis limited to {max_basis} columns, got {W.shape[1]}")
    return W


def bruteforce_min_residual(A, b, x0, W, max_basis=MAX_BASIS, dense_max=DENSE_MAX):
    """
    min over c of ||b - A (x0 + W c)|| with A W formed explicitly.
    :param max_basis: Largest accepted number of columns of W.
    :param dense_max: Largest operator dimension that is densified.
    :return: (minimum residual norm, coefficients c).
    """
    M = densify(A, dense_max)
    b = np.asarray(b, dtype=np.float64).ravel()
    x0 = np.zeros_like(b) if x0 is None else np.asarray(x0, dtype=np.float64).ravel()
    W = _basis(W, M.shape[0], max_basis)
    r0 = b - M @ x0
    if W.shape[1] == 0:
        return float(np.linalg.norm(r0)), np.zeros(0)
    AW = M @ W
    c, _, _, _ = scipy.linalg.lstsq(AW, r0, lapack_driver="gelsy")
    return float(np.linalg.norm(r0 - AW @ c)), c


def bruteforce_min_Anorm_error(A, b, x0, W, x_star=None, max_basis=MAX_BASIS, dense_max=DENSE_MAX):
    """
    min over c of ||x* - (x0 + W c)||_A for SPD A, from W^T A W c = W^T (b - A x0).
    A singular W^T A W is handled through a pseudo-inverse (rank reduction).
    :return: (minimum A-norm error, coefficients c).
    """
    M = densify(A, dense_max)
    b = np.asarray(b, dtype=np.float64).ravel()
    x0 = np.zeros_like(b) if x0 is None else np.asarray(x0, dtype=np.float64).ravel()
    W = _basis(W, M.shape[0], max_basis)
    if x_star is None:
        x_star, _ = dense_solve(M, b, dense_max)
    c = np.zeros(W.shape[1])
    if W.shape[1]:
        G = W.T @ M @ W
        c = scipy.linalg.pinvh(0.5 * (G + G.T)) @ (W.T @ (b - M @ x0))
    e = x_star - x0 - W @ c
    return float(np.sqrt(max(e @ (M @ e), 0.0))), c


def subspace_angles(X, Y, rank_tol=DEFAULT_RANK_TOL):
    """
    Principal angles between range(X) and range(Y), ascending, in [0, pi/2].
    Rank-deficient inputs are reduced first (with a warning), so fewer angles may come back.
    """
    X = as_finite_matrix(X, "X")
    Y = as_finite_matrix(Y, "Y")
    qx = thin_qr(X, rank_tol)
    qy = thin_qr(Y, rank_tol)
    if qx.rank < X.shape[1] or qy.rank < Y.shape[1]:
        logger.warning("⚠️ subspace_angles: inputs reduced to ranks %d and %d", qx.rank, qy.rank)
    if qx.rank == 0 or qy.rank == 0:
        return np.zeros(0)
    # sine-based for small angles; arccos of the cosines loses them below ~1e-8
    angles = scipy.linalg.subspace_angles(qx.q, qy.q)
    return np.sort(np.clip(angles, 0.0, np.pi / 2))
