"""
Harmonic Ritz selection from augmented Arnoldi data.

For the search space Z = [U V_j] the modified Arnoldi relation gives
A Z = [C, C B_j + V_{j+1} H_j] without any further operator applications.
With the thin QR A Z = Q_a R_a, the harmonic condition A w - theta w ⊥ range(A Z)
for w = Z g becomes the small pencil

    (Q_a^T Z) g = mu R_a g,    theta = 1 / mu,

which is solved through generalized_eig_small. Pairs with mu = 0 correspond
to infinite harmonic values and are skipped.
"""
import logging

import numpy as np

from core.dense_core import (
    DEFAULT_EIG_CAP,
    DEFAULT_PENCIL_COND_MAX,
    DEFAULT_RANK_TOL,
    generalized_eig_small,
    small_eig_general,
    thin_qr,
)
from strategies.selector_spec import SelectionResult, Which, take_columns
from utilities.error_handler import IllConditionedPencil

logger = logging.getLogger(__name__)


def augmented_products(rs, state):
    """
    Builds Z = [U D, V_j] and A Z from stored data, D scaling the U columns to unit norm.
    :param rs: RecycleSpace the Arnoldi run was projected against.
    :param state: ProjectedArnoldiState (or ArnoldiState when rs is empty).
    :return: (Z, AZ).
    """
    j = state.j
    V_j = state._V[:, :j]
    AV = state._V[:, : j + 1] @ state.H
    if rs.is_empty:
        return V_j.copy(), AV
    AV = AV + rs.C @ state.B
    scale = 1.0 / np.linalg.norm(rs.U, axis=0)
    Z = np.column_stack([rs.U * scale, V_j])
    AZ = np.column_stack([rs.C * scale, AV])
    return Z, AZ


def _harmonic_blocks(Z, AZ, cond_max, cap):
    qr = thin_qr(AZ, DEFAULT_RANK_TOL)
    if qr.rank < AZ.shape[1]:
        raise IllConditionedPencil(f"A Z has numerical rank {qr.rank} < {AZ.shape[1]}")
    pairs = generalized_eig_small(qr.q.T @ Z, qr.r, cond_max=cond_max, cap=cap)
    values, blocks, products = [], [], []
    for pair in pairs:
        if pair.value == 0:
            continue
        values.append(1.0 / pair.value)
        blocks.append(Z @ pair.vector)
        products.append(AZ @ pair.vector)
    return values, blocks, products


def _ritz_blocks(Z, AZ, cap):
    qr = thin_qr(Z, DEFAULT_RANK_TOL)
    if qr.rank == 0:
        return [], [], []
    R = qr.r[:, qr.kept]
    AQ = np.linalg.solve(R.T, AZ[:, qr.kept].T).T
    pairs = small_eig_general(qr.q.T @ AQ, cap=cap)
    values, blocks, products = [], [], []
    for pair in pairs:
        values.append(pair.value)
        blocks.append(qr.q @ pair.vector)
        products.append(AQ @ pair.vector)
    return values, blocks, products


def _augmented_pairs(rs, state, cond_max, cap):
    Z, AZ = augmented_products(rs, state)
    try:
        return (*_harmonic_blocks(Z, AZ, cond_max, cap), "harmonic")
    except IllConditionedPencil as e:
        logger.warning("⚠️ Harmonic Ritz pencil rejected (%s); falling back to Ritz selection", e)
        return (*_ritz_blocks(Z, AZ, cap), "ritz")


def harmonic_ritz_pairs(rs, state, which=Which.SMALLEST, cond_max=DEFAULT_PENCIL_COND_MAX,
                        cap=DEFAULT_EIG_CAP):
    """
    All harmonic Ritz pairs of the augmented space, ordered by `which`.
    Falls back to Ritz pairs (with a warning) when the pencil is ill-conditioned.
    :return: SelectionResult holding every pair.
    """
    if state.j + rs.k == 0:
        return SelectionResult.empty(state.n, "harmonic")
    values, blocks, products, method = _augmented_pairs(rs, state, cond_max, cap)
    width = sum(block.shape[1] for block in blocks)
    return take_columns(np.asarray(values, dtype=complex), blocks, products, which, width, method, state.n)


def harmonic_ritz_select(rs, state, k, which=Which.SMALLEST, cond_max=DEFAULT_PENCIL_COND_MAX,
                         cap=DEFAULT_EIG_CAP):
    """
    Chooses up to k harmonic Ritz vectors w = [U V_j] g.

    :param rs: RecycleSpace of the cycle (possibly empty).
    :param state: Projected Arnoldi state of the cycle.
    :param k: Target dimension; complex pairs use two columns and are skipped when they do not fit.
    :param which: SmallestMagnitude or LargestMagnitude (by |theta|).
    :return: SelectionResult; ``vectors`` is U_raw and ``products`` = A U_raw.
    """
    if k == 0 or state.j + rs.k == 0:
        return SelectionResult.empty(state.n, "harmonic")
    values, blocks, products, method = _augmented_pairs(rs, state, cond_max, cap)
    result = take_columns(np.asarray(values, dtype=complex), blocks, products, which, k, method, state.n)
    logger.debug("%s selection: %d of %d candidate columns", method, result.k, rs.k + state.j)
    return result


def ritz_select(rs, state, k, which=Which.SMALLEST, cap=DEFAULT_EIG_CAP):
    """ Plain Ritz vectors of the augmented space [U V_j] (no harmonic pencil). """
    if k == 0 or state.j + rs.k == 0:
        return SelectionResult.empty(state.n, "ritz")
    Z, AZ = augmented_products(rs, state)
    values, blocks, products = _ritz_blocks(Z, AZ, cap)
    return take_columns(np.asarray(values, dtype=complex), blocks, products, which, k, "ritz", state.n)
