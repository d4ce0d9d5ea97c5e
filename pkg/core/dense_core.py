"""
Small dense linear-algebra kernels that every projected subproblem reduces to.

All routines take and return plain numpy arrays (``DenseMatrix`` is an alias,
not a wrapper) and are free of shared state.
"""
import logging
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from utilities.error_handler import ConvergenceFailure, IllConditionedPencil, InvalidInput

logger = logging.getLogger(__name__)

DenseMatrix = np.ndarray

DEFAULT_RANK_TOL = 1e-12
DEFAULT_EIG_CAP = 500
DEFAULT_SVD_CAP = 500
DEFAULT_PENCIL_COND_MAX = 1e12


def as_finite_matrix(M, name="matrix"):
    """
    Converts input to a 2-D float64 array and rejects non-finite entries.
    :param M: Array-like input.
    :param name: Used in the error message.
    :return: 2-D numpy array.
    """
    arr = np.asarray(M, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise InvalidInput(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} contains non-finite entries")
    return arr


class ThinQR(NamedTuple):
    q: DenseMatrix
    r: DenseMatrix
    rank: int
    kept: np.ndarray


def thin_qr(M, rank_tol=DEFAULT_RANK_TOL):
    """
    Thin QR factorization with numerical column dropping.

    Rank is decided by a column-pivoted factorization: trailing pivots with
    |R_ii| <= rank_tol * |R_11| are dropped. The surviving columns (in their
    original order) are refactored with Householder QR and the signs are fixed
    so that the triangular block has a positive diagonal.

    :param M: n x k matrix.
    :param rank_tol: Relative drop tolerance (>= 0).
    :return: ThinQR(q n x r, r r x k, rank r, kept column indices). The columns
             of R at ``kept`` form an upper-triangular r x r block; dropped
             columns carry their coordinates Q^T M in the basis.
    """
    M = as_finite_matrix(M, "thin_qr input")
    if rank_tol < 0:
        raise InvalidInput("rank_tol must be nonnegative")
    n, k = M.shape
    if k == 0 or n == 0:
        return ThinQR(np.zeros((n, 0)), np.zeros((0, k)), 0, np.zeros(0, dtype=np.int64))

    _, r_piv, piv = scipy.linalg.qr(M, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r_piv))
    if diag.size == 0 or diag[0] == 0.0:
        return ThinQR(np.zeros((n, 0)), np.zeros((0, k)), 0, np.zeros(0, dtype=np.int64))

    rank = 0
    threshold = rank_tol * diag[0]
    for value in diag:
        if value > threshold and value > 0.0:
            rank += 1
        else:
            break

    kept = np.sort(piv[:rank]).astype(np.int64)
    q, r_kept = np.linalg.qr(M[:, kept], mode="reduced")
    signs = np.sign(np.diag(r_kept))
    signs[signs == 0] = 1.0
    q = q * signs
    r_kept = r_kept * signs[:, None]

    r = q.T @ M
    r[:, kept] = r_kept
    if rank < k:
        logger.debug("thin_qr dropped %d of %d columns (rank_tol=%g)", k - rank, k, rank_tol)
    return ThinQR(q, r, rank, kept)


def givens(a, b):
    """ Returns (c, s, r) with [c s; -s c] [a; b] = [r; 0] and r >= 0. """
    r = float(np.hypot(a, b))
    if r == 0.0:
        return 1.0, 0.0, 0.0
    return a / r, b / r, r


class GivensLeastSquares:
    """
    Incremental least-squares solver for an upper-Hessenberg system.

    Columns of H are appended one at a time; each new column is reduced by the
    stored rotations and one fresh rotation, so the current residual norm is
    available after every step at O(j) cost.
    """

    def __init__(self, rhs, capacity):
        """
        :param rhs: Right-hand side of length capacity + 1 (shorter input is zero-padded).
        :param capacity: Maximum number of columns.
        """
        rhs = np.asarray(rhs, dtype=np.float64).ravel()
        self.capacity = int(capacity)
        self.g = np.zeros(self.capacity + 1)
        self.g[: rhs.size] = rhs
        self.R = np.zeros((self.capacity + 1, self.capacity))
        self.cs = np.zeros(self.capacity)
        self.sn = np.zeros(self.capacity)
        self.ncols = 0

    def add_column(self, h):
        """
        Appends one Hessenberg column.
        :param h: Column entries for rows 0..ncols+1.
        :return: Least-squares residual norm with the new column included.
        """
        j = self.ncols
        if j >= self.capacity:
            raise InvalidInput("GivensLeastSquares capacity exceeded")
        col = np.zeros(j + 2)
        h = np.asarray(h, dtype=np.float64).ravel()
        col[: min(h.size, j + 2)] = h[: j + 2]
        for i in range(j):
            c, s = self.cs[i], self.sn[i]
            top = c * col[i] + s * col[i + 1]
            col[i + 1] = -s * col[i] + c * col[i + 1]
            col[i] = top
        c, s, r = givens(col[j], col[j + 1])
        self.cs[j], self.sn[j] = c, s
        col[j], col[j + 1] = r, 0.0
        top = c * self.g[j] + s * self.g[j + 1]
        self.g[j + 1] = -s * self.g[j] + c * self.g[j + 1]
        self.g[j] = top
        self.R[: j + 2, j] = col
        self.ncols = j + 1
        return self.residual_norm()

    def residual_norm(self):
        return float(np.linalg.norm(self.g[self.ncols:]))

    def solve(self):
        """
        Back-substitutes for the current minimizer.
        :return: (y, resnorm); y is the minimum-norm minimizer if R is singular.
        """
        j = self.ncols
        if j == 0:
            return np.zeros(0), self.residual_norm()
        R = self.R[:j, :j]
        g = self.g[:j]
        if np.all(np.diag(R) != 0.0):
            y = scipy.linalg.solve_triangular(R, g, lower=False, check_finite=False)
            return y, self.residual_norm()
        y = scipy.linalg.lstsq(R, g)[0]
        inner = np.linalg.norm(R @ y - g)
        return y, float(np.hypot(inner, self.residual_norm()))


def hessenberg_lstsq(H, rhs):
    """
    Solves min ||H y - rhs|| for upper-Hessenberg H by Givens rotations.
    :param H: (j+1) x j upper-Hessenberg matrix.
    :param rhs: Vector of length j+1.
    :return: (y, resnorm).
    """
    H = as_finite_matrix(H, "Hessenberg matrix")
    rhs = np.asarray(rhs, dtype=np.float64).ravel()
    rows, j = H.shape
    if rows != j + 1 or rhs.size != rows:
        raise InvalidInput(f"expected (j+1) x j Hessenberg and rhs of length j+1, got {H.shape} and {rhs.size}")
    if not np.all(np.isfinite(rhs)):
        raise InvalidInput("rhs contains non-finite entries")
    if j > 0 and np.any(np.tril(H, -2) != 0.0):
        raise InvalidInput("matrix is not upper-Hessenberg")
    solver = GivensLeastSquares(rhs, j)
    for col in range(j):
        solver.add_column(H[: col + 2, col])
    return solver.solve()


def sym_tridiag_eig(diag, offdiag):
    """
    Eigen-decomposition of a symmetric tridiagonal matrix.
    :return: (values ascending, orthonormal eigenvectors as columns).
    """
    d = np.asarray(diag, dtype=np.float64).ravel()
    e = np.asarray(offdiag, dtype=np.float64).ravel()
    if d.size == 0:
        raise InvalidInput("empty tridiagonal matrix")
    if e.size != d.size - 1:
        raise InvalidInput(f"offdiag length must be {d.size - 1}, got {e.size}")
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
        raise InvalidInput("tridiagonal entries must be finite")
    if d.size == 1:
        return d.copy(), np.ones((1, 1))
    try:
        values, vectors = scipy.linalg.eigh_tridiagonal(d, e)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"tridiagonal eigensolver failed: {exc}") from exc
    return values, vectors


@dataclass(frozen=True)
class EigenPair:
    """
    One eigenvalue with its real invariant subspace.

    ``vector`` is m x 1 for a real eigenvalue and an m x 2 orthonormal basis
    of the invariant plane for a complex-conjugate pair (``value`` then holds
    the member with positive imaginary part).
    """
    value: complex
    vector: DenseMatrix

    @property
    def is_real(self):
        return self.vector.shape[1] == 1

    @property
    def magnitude(self):
        return abs(self.value)


def small_eig_general(M, cap=DEFAULT_EIG_CAP):
    """
    Eigenpairs of a small nonsymmetric matrix, sorted by increasing |value|.
    :param M: m x m matrix.
    :param cap: Maximum accepted m.
    :return: List of EigenPair.
    """
    M = as_finite_matrix(M, "eigenproblem matrix")
    m = M.shape[0]
    if M.shape[1] != m:
        raise InvalidInput(f"eigenproblem matrix must be square, got {M.shape}")
    if m > cap:
        raise InvalidInput(f"eigenproblem size {m} exceeds cap {cap}")
    if m == 0:
        return []
    try:
        values, vectors = scipy.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"QR iteration did not converge: {exc}") from exc

    pairs = []
    for idx, value in enumerate(values):
        if value.imag == 0.0:
            v = np.real(vectors[:, idx])
            v = v / np.linalg.norm(v)
            pairs.append(EigenPair(complex(value.real, 0.0), v.reshape(-1, 1)))
        elif value.imag > 0.0:
            plane = thin_qr(np.column_stack([vectors[:, idx].real, vectors[:, idx].imag]), rank_tol=0.0).q
            pairs.append(EigenPair(complex(value), plane))
    pairs.sort(key=lambda pair: pair.magnitude)
    return pairs


def generalized_eig_small(A, B, cond_max=DEFAULT_PENCIL_COND_MAX, cap=DEFAULT_EIG_CAP):
    """
    Eigenpairs of the pencil (A, B) through the reduction B^{-1} A.
    :raises IllConditionedPencil: when cond(B) exceeds cond_max.
    """
    A = as_finite_matrix(A, "pencil A")
    B = as_finite_matrix(B, "pencil B")
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise InvalidInput(f"pencil matrices must be square and equal in shape, got {A.shape} and {B.shape}")
    if A.shape[0] == 0:
        return []
    cond = np.linalg.cond(B)
    if not np.isfinite(cond) or cond > cond_max:
        raise IllConditionedPencil(f"pencil right-hand matrix condition estimate {cond:.3e} exceeds {cond_max:.1e}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        reduced = scipy.linalg.solve(B, A)
    return small_eig_general(reduced, cap=cap)


def svd_small(M, cap=DEFAULT_SVD_CAP):
    """
    Thin SVD.
    :return: (left n x r, singular values nonincreasing, right s x r).
    """
    M = as_finite_matrix(M, "svd input")
    if M.shape[1] > cap:
        raise InvalidInput(f"svd column count {M.shape[1]} exceeds cap {cap}")
    if M.size == 0:
        r = min(M.shape)
        return np.zeros((M.shape[0], r)), np.zeros(r), np.zeros((M.shape[1], r))
    try:
        left, sing, right_t = scipy.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"SVD did not converge: {exc}") from exc
    return left, sing, right_t.T
