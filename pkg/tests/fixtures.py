"""
Deterministic problem builders and reference routines shared by the test suites.

The reference routines deliberately avoid the library's own QR, Arnoldi and
least-squares code so that comparisons against them are independent.
"""
import numpy as np


def rng(seed):
    return np.random.default_rng(seed)


def random_nonsymmetric(n, seed=0, shift=2.0):
    """ Eigenvalues inside the disc of radius ~1 around `shift`. """
    return rng(seed).standard_normal((n, n)) / np.sqrt(n) + shift * np.eye(n)


def random_symmetric(n, seed=0, eigenvalues=None):
    """ Q diag(eigenvalues) Q^T with a random orthogonal Q; indefinite by default. """
    generator = rng(seed)
    if eigenvalues is None:
        eigenvalues = np.concatenate([-np.linspace(1.0, 3.0, n // 2), np.linspace(1.0, 5.0, n - n // 2)])
    Q, _ = np.linalg.qr(generator.standard_normal((n, n)))
    A = Q @ np.diag(eigenvalues) @ Q.T
    return 0.5 * (A + A.T)


def random_spd(n, seed=0, cond=100.0):
    return random_symmetric(n, seed, eigenvalues=np.geomspace(1.0, cond, n))


def laplacian_1d(n):
    return 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)


def laplacian_2d(g):
    """ Dense 5-point Dirichlet Laplacian on a g x g grid. """
    T = laplacian_1d(g)
    return np.kron(np.eye(g), T) + np.kron(T, np.eye(g))


def cgs2(M, drop_tol=1e-12):
    """ Classical Gram-Schmidt with one reorthogonalization; drops dependent columns. """
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    Q = np.zeros((M.shape[0], 0))
    scale = max(np.linalg.norm(M, axis=0).max(initial=0.0), 1e-300)
    for col in M.T:
        w = col - Q @ (Q.T @ col)
        w = w - Q @ (Q.T @ w)
        nw = np.linalg.norm(w)
        if nw > drop_tol * scale:
            Q = np.column_stack([Q, w / nw])
    return Q


def krylov_basis(A, v, j):
    """ Orthonormal basis of span{v, A v, ..., A^{j-1} v} for a dense (or callable) A. """
    apply = A if callable(A) else (lambda x: A @ x)
    Q = cgs2(v)
    while Q.shape[1] < j:
        grown = cgs2(np.column_stack([Q, apply(Q[:, -1])]))
        if grown.shape[1] == Q.shape[1]:
            break
        Q = grown
    return Q


def projected_krylov_basis(A, C, v, j):
    """ Krylov basis of (I - C C^T) A started from (I - C C^T) v. """
    def project(x):
        return x - C @ (C.T @ x)
    return krylov_basis(lambda x: project(A @ x), project(v), j)


def min_residual(A, b, x0, W):
    """ Dense least-squares reference, min ||b - A (x0 + W c)||. """
    r0 = b - A @ x0
    if W.shape[1] == 0:
        return float(np.linalg.norm(r0))
    AW = A @ W
    c = np.linalg.lstsq(AW, r0, rcond=None)[0]
    return float(np.linalg.norm(r0 - AW @ c))
