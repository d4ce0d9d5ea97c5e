import logging

import numpy as np

from core.dense_core import DEFAULT_SVD_CAP, as_finite_matrix, svd_small, thin_qr
from utilities.error_handler import InvalidInput

logger = logging.getLogger(__name__)


def pod_select(snapshots, k, cap=DEFAULT_SVD_CAP):
    """
    Leading k left singular vectors of the snapshot matrix (columns are not centered).
    :param snapshots: n x s matrix, one snapshot per column.
    :param k: Target dimension (clipped to the snapshot rank).
    :return: n x k orthonormal basis.
    """
    S = as_finite_matrix(snapshots, "snapshots")
    if S.shape[1] < 1:
        raise InvalidInput("POD needs at least one snapshot")
    left, sing, _ = svd_small(S, cap=cap)
    rank = int(np.count_nonzero(sing > 0.0))
    if k > rank:
        logger.debug("POD: requested %d modes, snapshot rank is %d", k, rank)
    return left[:, : min(k, rank)]


def snapshot_reconstruction_error(snapshots, basis):
    """ Frobenius norm of S - B B^T S with B an orthonormalized copy of basis. """
    S = as_finite_matrix(snapshots, "snapshots")
    B = thin_qr(basis, rank_tol=0.0).q if np.size(basis) else np.zeros((S.shape[0], 0))
    return float(np.linalg.norm(S - B @ (B.T @ S)))
