"""
Sparse operators, matrix-vector products and Matrix Market / vector file I/O.
"""
import logging
import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse
from numba import njit

from utilities.error_handler import InvalidInput, IoError, ParseError, UnsupportedFormat

logger = logging.getLogger(__name__)

MM_BANNER = "%%matrixmarket"
SUPPORTED_FIELDS = ("real", "integer")
SUPPORTED_SYMMETRY = ("general", "symmetric")


@njit
def _csr_matvec_kernel(row_ptr, col_idx, vals, x, out):
    for row in range(out.shape[0]):
        acc = 0.0
        for i in range(row_ptr[row], row_ptr[row + 1]):
            acc += vals[i] * x[col_idx[i]]
        out[row] = acc


def _frozen(arr, dtype):
    arr = np.array(arr, dtype=dtype, copy=True).ravel()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """ Immutable compressed-row sparse matrix with sorted, duplicate-free rows. """
    nrows: int
    ncols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nrows", int(self.nrows))
        object.__setattr__(self, "ncols", int(self.ncols))
        object.__setattr__(self, "row_ptr", _frozen(self.row_ptr, np.int64))
        object.__setattr__(self, "col_idx", _frozen(self.col_idx, np.int64))
        object.__setattr__(self, "vals", _frozen(self.vals, np.float64))
        self._validate()

    def _validate(self):
        if self.nrows < 0 or self.ncols < 0:
            raise InvalidInput(f"negative dimensions {self.nrows} x {self.ncols}")
        if self.row_ptr.size != self.nrows + 1:
            raise InvalidInput(f"row_ptr must have length {self.nrows + 1}, got {self.row_ptr.size}")
        nnz = self.col_idx.size
        if self.vals.size != nnz:
            raise InvalidInput(f"col_idx and vals lengths differ ({nnz} vs {self.vals.size})")
        if self.row_ptr[0] != 0 or self.row_ptr[-1] != nnz:
            raise InvalidInput("row_ptr must start at 0 and end at nnz")
        if np.any(np.diff(self.row_ptr) < 0):
            raise InvalidInput("row_ptr must be nondecreasing")
        if nnz == 0:
            return
        if self.col_idx.min() < 0 or self.col_idx.max() >= self.ncols:
            raise InvalidInput("column index out of range")
        if not np.all(np.isfinite(self.vals)):
            raise InvalidInput("matrix values must be finite")
        row_start = np.zeros(nnz, dtype=bool)
        starts = self.row_ptr[:-1]
        row_start[starts[starts < nnz]] = True
        increasing = np.diff(self.col_idx) > 0
        if np.any(~increasing & ~row_start[1:]):
            raise InvalidInput("column indices must be strictly increasing within each row")

    @property
    def shape(self):
        return self.nrows, self.ncols

    @property
    def nnz(self):
        return int(self.col_idx.size)

    def __eq__(self, other):
        if not isinstance(other, CsrMatrix):
            return NotImplemented
        return (self.shape == other.shape
                and np.array_equal(self.row_ptr, other.row_ptr)
                and np.array_equal(self.col_idx, other.col_idx)
                and np.array_equal(self.vals, other.vals))

    __hash__ = None

    def __matmul__(self, other):
        other = np.asarray(other, dtype=np.float64)
        if other.ndim == 1:
            return matvec(self, other)
        return matmat(self, other)

    @classmethod
    def from_scipy(cls, sp):
        csr = scipy.sparse.csr_matrix(sp, dtype=np.float64, copy=True)
        csr.sum_duplicates()
        csr.sort_indices()
        return cls(csr.shape[0], csr.shape[1], csr.indptr, csr.indices, csr.data)

    @classmethod
    def from_dense(cls, M):
        M = np.asarray(M, dtype=np.float64)
        if M.ndim != 2:
            raise InvalidInput(f"dense matrix must be 2-dimensional, got shape {M.shape}")
        return cls.from_scipy(scipy.sparse.csr_matrix(M))

    @classmethod
    def identity(cls, n):
        return cls(n, n, np.arange(n + 1), np.arange(n), np.ones(n))

    @classmethod
    def diag(cls, d):
        d = np.asarray(d, dtype=np.float64).ravel()
        n = d.size
        return cls(n, n, np.arange(n + 1), np.arange(n), d)

    def to_scipy(self):
        return scipy.sparse.csr_matrix(
            (np.array(self.vals), np.array(self.col_idx), np.array(self.row_ptr)), shape=self.shape)

    def to_dense(self):
        return self.to_scipy().toarray()

    def transpose(self):
        return CsrMatrix.from_scipy(self.to_scipy().T)

    def frobenius_norm(self):
        return float(np.linalg.norm(self.vals))


def matvec(A, v):
    """
    Sparse product A v.
    :param A: CsrMatrix.
    :param v: Vector of length A.ncols.
    :return: Vector of length A.nrows.
    """
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size != A.ncols:
        raise InvalidInput(f"matvec dimension mismatch: matrix {A.shape}, vector {v.shape}")
    out = np.zeros(A.nrows)
    _csr_matvec_kernel(A.row_ptr, A.col_idx, A.vals, v, out)
    return out


def matmat(A, X):
    """ Column-by-column sparse product A X. """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != A.ncols:
        raise InvalidInput(f"matmat dimension mismatch: matrix {A.shape}, block {X.shape}")
    out = np.zeros((A.nrows, X.shape[1]))
    for col in range(X.shape[1]):
        out[:, col] = matvec(A, X[:, col])
    return out


class LinearOperator:
    """
    Abstract square operator v -> A v.

    ``symmetric`` and ``spd`` are declared properties; solvers spot-check them
    but never infer them.
    """

    def __init__(self, dim, matvec, rmatvec=None, symmetric=False, spd=False, norm_hint=None, name="operator"):
        """
        :param dim: Operator dimension n.
        :param matvec: Callable applying the operator to a length-n vector.
        :param rmatvec: Optional callable applying the transpose.
        :param symmetric: Declared symmetry.
        :param spd: Declared positive definiteness (implies symmetric).
        :param norm_hint: Cheap upper estimate of the 2-norm, if known.
        :param name: Label used in log messages.
        """
        self.dim = int(dim)
        self._matvec = matvec
        self.spd = bool(spd)
        self.symmetric = bool(symmetric) or self.spd
        if rmatvec is None and self.symmetric:
            rmatvec = matvec
        self._rmatvec = rmatvec
        self.norm_hint = None if norm_hint is None else float(norm_hint)
        self.name = name

    @property
    def shape(self):
        return self.dim, self.dim

    @property
    def has_transpose(self):
        return self._rmatvec is not None

    def _check(self, v):
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 1 or v.size != self.dim:
            raise InvalidInput(f"{self.name}: expected vector of length {self.dim}, got shape {v.shape}")
        return v

    def apply(self, v):
        return np.asarray(self._matvec(self._check(v)), dtype=np.float64)

    def apply_transpose(self, v):
        if self._rmatvec is None:
            raise InvalidInput(f"{self.name} has no transpose action")
        return np.asarray(self._rmatvec(self._check(v)), dtype=np.float64)

    def __matmul__(self, v):
        v = np.asarray(v, dtype=np.float64)
        if v.ndim == 2:
            return self.matmat(v)
        return self.apply(v)

    def matmat(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] != self.dim:
            raise InvalidInput(f"{self.name}: expected block with {self.dim} rows, got shape {X.shape}")
        out = np.zeros((self.dim, X.shape[1]))
        for col in range(X.shape[1]):
            out[:, col] = self.apply(X[:, col])
        return out

    def shifted(self, gamma):
        """ Returns the operator A + gamma I. """
        gamma = float(gamma)
        rmatvec = None
        if self._rmatvec is not None:
            rmatvec = lambda v: self._rmatvec(v) + gamma * v
        hint = None if self.norm_hint is None else self.norm_hint + abs(gamma)
        return LinearOperator(
            self.dim,
            lambda v: self._matvec(v) + gamma * v,
            rmatvec=rmatvec,
            symmetric=self.symmetric,
            spd=self.spd and gamma >= 0.0,
            norm_hint=hint,
            name=f"{self.name}{gamma:+g}I",
        )


def aslinearoperator(obj, symmetric=False, spd=False, dim=None, name=None):
    """
    Wraps a CsrMatrix, dense array, scipy sparse matrix or callable.
    :param obj: Object to wrap; a LinearOperator is returned unchanged.
    :param dim: Required when obj is a bare callable.
    :return: LinearOperator.
    """
    if isinstance(obj, LinearOperator):
        return obj
    if scipy.sparse.issparse(obj):
        obj = CsrMatrix.from_scipy(obj)
    if isinstance(obj, CsrMatrix):
        if obj.nrows != obj.ncols:
            raise InvalidInput(f"operator must be square, got {obj.shape}")
        A = obj
        rmatvec = None
        if not (symmetric or spd):
            At = A.transpose()
            rmatvec = lambda v: matvec(At, v)
        return LinearOperator(A.nrows, lambda v: matvec(A, v), rmatvec=rmatvec, symmetric=symmetric,
                              spd=spd, norm_hint=A.frobenius_norm(), name=name or "csr")
    if callable(obj):
        if dim is None:
            raise InvalidInput("dim is required to wrap a callable")
        return LinearOperator(dim, obj, symmetric=symmetric, spd=spd, name=name or "callable")
    M = np.asarray(obj, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInput(f"operator must be a square 2-D array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInput("operator entries must be finite")
    M = M.copy()
    return LinearOperator(M.shape[0], lambda v: M @ v, rmatvec=lambda v: M.T @ v, symmetric=symmetric,
                          spd=spd, norm_hint=float(np.linalg.norm(M)), name=name or "dense")


def norm_estimate(op, iters=10, seed=0):
    """
    Power-iteration estimate of ||op||_2.

    Iterates on op^T op when a transpose is available and on op itself
    otherwise. The value returned is the largest ||op x|| seen over unit
    iterates x, so it never exceeds the true norm.
    """
    op = aslinearoperator(op)
    if iters < 1:
        raise InvalidInput("iters must be at least 1")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.dim)
    x /= np.linalg.norm(x)
    best = 0.0
    for _ in range(iters):
        y = op.apply(x)
        ny = float(np.linalg.norm(y))
        best = max(best, ny)
        if ny == 0.0:
            break
        if op.has_transpose:
            z = op.apply_transpose(y)
            nz = np.linalg.norm(z)
            if nz == 0.0:
                break
            x = z / nz
        else:
            x = y / ny
    return best


def operator_norm(op):
    """ Norm hint if the operator carries one, else a 10-step power estimate. """
    if op.norm_hint is not None:
        return op.norm_hint
    estimate = norm_estimate(op, iters=10)
    op.norm_hint = estimate
    return estimate


def read_matrix_market(path):
    """
    Reads a coordinate real (general or symmetric) Matrix Market file.
    Symmetric storage is mirrored to full storage; duplicate entries are summed.
    :param path: File path.
    :return: CsrMatrix.
    """
    if not os.path.exists(path):
        raise IoError(f"Matrix Market file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise IoError(f"Cannot read {path}: {e}") from e

    if not lines:
        raise ParseError("empty file", 1)
    header = lines[0].strip().lower().split()
    if len(header) != 5 or header[0] != MM_BANNER or header[1] != "matrix":
        raise ParseError("missing or malformed %%MatrixMarket header", 1)
    _, _, fmt, field, symmetry = header
    if fmt != "coordinate":
        raise UnsupportedFormat(f"unsupported Matrix Market format '{fmt}' (coordinate only)")
    if field not in SUPPORTED_FIELDS:
        raise UnsupportedFormat(f"unsupported Matrix Market field '{field}'")
    if symmetry not in SUPPORTED_SYMMETRY:
        raise UnsupportedFormat(f"unsupported Matrix Market symmetry '{symmetry}'")

    size = None
    rows, cols, vals = [], [], []
    line_no = 1
    for line_no, raw in enumerate(lines[1:], start=2):
        text = raw.strip()
        if not text or text.startswith("%"):
            continue
        tokens = text.split()
        if size is None:
            try:
                if len(tokens) != 3:
                    raise ValueError("expected 'nrows ncols nnz'")
                size = tuple(int(t) for t in tokens)
            except ValueError as e:
                raise ParseError(f"bad size line: {e}", line_no) from e
            if min(size) < 0:
                raise ParseError("negative size", line_no)
            if symmetry == "symmetric" and size[0] != size[1]:
                raise ParseError("symmetric matrix must be square", line_no)
            continue
        try:
            if len(tokens) != 3:
                raise ValueError("expected 'row col value'")
            i, j, value = int(tokens[0]), int(tokens[1]), float(tokens[2])
        except ValueError as e:
            raise ParseError(f"bad entry: {e}", line_no) from e
        if not (1 <= i <= size[0] and 1 <= j <= size[1]):
            raise ParseError(f"index ({i}, {j}) outside {size[0]} x {size[1]}", line_no)
        if not np.isfinite(value):
            raise ParseError("non-finite value", line_no)
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(value)

    if size is None:
        raise ParseError("missing size line", line_no)
    if len(vals) != size[2]:
        raise ParseError(f"expected {size[2]} entries, found {len(vals)}", line_no)

    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    if symmetry == "symmetric":
        off = rows != cols
        rows, cols, vals = (np.concatenate([rows, cols[off]]),
                            np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, vals[off]]))
    coo = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(size[0], size[1]))
    A = CsrMatrix.from_scipy(coo.tocsr())
    logger.info("📂 Loaded %s: %d x %d, nnz=%d (%s)", path, A.nrows, A.ncols, A.nnz, symmetry)
    return A


def write_matrix_market(A, path, symmetric=False, comment=None):
    """
    Writes a CsrMatrix as coordinate real Matrix Market.
    :param symmetric: Store only the lower triangle under a 'symmetric' header.
    """
    scipy_csr = A.to_scipy().tocoo()
    rows, cols, vals = scipy_csr.row, scipy_csr.col, scipy_csr.data
    if symmetric:
        if A.nrows != A.ncols:
            raise InvalidInput("symmetric storage requires a square matrix")
        lower = rows >= cols
        rows, cols, vals = rows[lower], cols[lower], vals[lower]
    header = f"%%MatrixMarket matrix coordinate real {'symmetric' if symmetric else 'general'}\n"
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(header)
            if comment:
                for line in str(comment).splitlines():
                    f.write(f"% {line}\n")
            f.write(f"{A.nrows} {A.ncols} {vals.size}\n")
            for i, j, v in zip(rows, cols, vals):
                f.write(f"{i + 1} {j + 1} {v:.17g}\n")
    except OSError as e:
        raise IoError(f"Cannot write {path}: {e}") from e


def read_vector(path):
    """ Reads a plain-text vector (one value per line, '%' comments allowed). """
    if not os.path.exists(path):
        raise IoError(f"Vector file not found: {path}")
    try:
        v = np.loadtxt(path, dtype=np.float64, comments="%", ndmin=1)
    except ValueError as e:
        raise ParseError(f"malformed vector file {path}: {e}") from e
    except OSError as e:
        raise IoError(f"Cannot read {path}: {e}") from e
    if v.ndim != 1:
        raise ParseError(f"vector file {path} must contain one value per line")
    if not np.all(np.isfinite(v)):
        raise ParseError(f"vector file {path} contains non-finite values")
    return v


def write_vector(v, path):
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        np.savetxt(path, np.asarray(v, dtype=np.float64).ravel(), fmt="%.17g")
    except OSError as e:
        raise IoError(f"Cannot write {path}: {e}") from e
