import numpy as np

from core.dense_core import DEFAULT_RANK_TOL, thin_qr
from utilities.error_handler import InvalidInput


def previous_solutions_select(history, k, rank_tol=DEFAULT_RANK_TOL):
    """
    Orthonormal basis of the k most recent solutions, rank-reduced if they are dependent.
    :param history: Solution vectors, oldest first.
    :return: n x r matrix with r <= k.
    """
    if not history:
        raise InvalidInput("previous-solutions selection needs at least one solution")
    recent = [np.asarray(x, dtype=np.float64).ravel() for x in history[-k:]] if k > 0 else []
    if not recent:
        return np.zeros((np.size(history[-1]), 0))
    return thin_qr(np.column_stack(recent), rank_tol).q
