"""
Ritz selection over span(U_next) + span(window) for the short-recurrence solvers.

The small symmetric matrix is assembled from the stored operator products of
both blocks, so no matvecs are spent and the window vectors need not be exactly
orthonormal (CG search directions are A-conjugate, not orthonormal).
"""
import logging

import numpy as np
import scipy.linalg

from core.dense_core import DEFAULT_EIG_CAP, DEFAULT_RANK_TOL, thin_qr
from strategies.selector_spec import SelectionResult, Which, take_columns
from utilities.error_handler import InvalidInput

logger = logging.getLogger(__name__)


def ritz_window_pairs(U, AU, W, AW, rank_tol=DEFAULT_RANK_TOL, cap=DEFAULT_EIG_CAP):
    """
    Rayleigh-Ritz on the combined space.
    :param U: n x k current outgoing recycle basis (may have 0 columns).
    :param AU: Its operator products.
    :param W: n x p window vectors.
    :param AW: Their operator products.
    :param cap: Maximum accepted dimension of the combined space.
    :return: (values ascending, Ritz vectors, their products, projected matrix).
    """
    Z = np.column_stack([U, W])
    AZ = np.column_stack([AU, AW])
    qr = thin_qr(Z, rank_tol)
    if qr.rank == 0:
        n = Z.shape[0]
        return np.zeros(0), np.zeros((n, 0)), np.zeros((n, 0)), np.zeros((0, 0))
    if qr.rank < Z.shape[1]:
        logger.debug("Ritz window space reduced from %d to %d", Z.shape[1], qr.rank)
    if qr.rank > cap:
        raise InvalidInput(f"Ritz window space of dimension {qr.rank} exceeds cap {cap}")
    R = qr.r[:, qr.kept]
    AQ = scipy.linalg.solve_triangular(R.T, AZ[:, qr.kept].T, lower=True).T
    M = qr.q.T @ AQ
    M = 0.5 * (M + M.T)
    values, G = scipy.linalg.eigh(M)
    return values, qr.q @ G, AQ @ G, M


def ritz_window_select(U, AU, W, AW, k, which=Which.SMALLEST, cap=DEFAULT_EIG_CAP):
    """
    k Ritz vectors of A restricted to span(U) + span(W), ordered by `which`.
    :return: SelectionResult with vectors and products.
    """
    n = W.shape[0] if W is not None else U.shape[0]
    if k == 0:
        return SelectionResult.empty(n, "ritz_window")
    if W is None:
        W = np.zeros((n, 0))
        AW = np.zeros((n, 0))
    values, vectors, products, _ = ritz_window_pairs(U, AU, W, AW, cap=cap)
    blocks = [vectors[:, [i]] for i in range(values.size)]
    product_blocks = [products[:, [i]] for i in range(values.size)]
    return take_columns(values.astype(complex), blocks, product_blocks, which, k, "ritz_window", n)
