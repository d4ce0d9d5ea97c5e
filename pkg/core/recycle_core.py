"""
Recycle-space framework: normalization of an augmentation basis, the
complement projector I - Q, its sibling P (Q A = A P), the projected Arnoldi
step that captures B, and assembly of the full solution.

Variants
--------
Orthogonal
    C = A U has orthonormal columns and Q = C C^T.
ObliqueFOM / ObliqueMR
    Q = A U (U^T A U)^{-1} U^T, the projector onto range(A U) along U^perp.
    Both store the LU factors of E = U^T A U; they differ only in the inner
    method run on (I - Q) A (FOM versus GMRES). With ``a_orthonormal`` the
    basis is rescaled so that E = I and no small solve is needed.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import Optional

import numpy as np
import scipy.linalg

from core.dense_core import DEFAULT_PENCIL_COND_MAX, DEFAULT_RANK_TOL, as_finite_matrix, svd_small, thin_qr
from core.krylov_base import RESIDUAL_GAP_TOL, ArnoldiState, arnoldi_extend
from core.sparse_io import LinearOperator, aslinearoperator, operator_norm
from utilities.config_loader import debug_checks_enabled
from utilities.error_handler import (
    EmptyRecycleSpace,
    IllConditionedPencil,
    InvalidInput,
    InvariantViolation,
    NotPositiveDefinite,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_DIM = 100


class RecycleVariant(str, Enum):
    ORTHOGONAL = "Orthogonal"
    OBLIQUE_FOM = "ObliqueFOM"
    OBLIQUE_MR = "ObliqueMR"

    @property
    def is_oblique(self):
        return self is not RecycleVariant.ORTHOGONAL


@dataclass(frozen=True, eq=False)
class RecycleSpace:
    """ Immutable pair (U, C = A U) plus the data needed to apply Q. """
    U: np.ndarray
    C: np.ndarray
    variant: RecycleVariant = RecycleVariant.ORTHOGONAL
    E: Optional[np.ndarray] = None
    E_lu: Optional[tuple] = None
    a_orthonormal: bool = False
    prepare_matvecs: int = field(default=0, compare=False)

    @classmethod
    def empty(cls, n, variant=RecycleVariant.ORTHOGONAL):
        return cls(np.zeros((n, 0)), np.zeros((n, 0)), RecycleVariant(variant))

    @property
    def n(self):
        return self.U.shape[0]

    @property
    def k(self):
        return self.U.shape[1]

    @property
    def is_empty(self):
        return self.k == 0


def coefficients(rs, v):
    """ Q-coefficients of v: C^T v (Orthogonal) or E^{-1} U^T v (oblique). """
    if rs.is_empty:
        return np.zeros(0)
    if rs.variant is RecycleVariant.ORTHOGONAL:
        return rs.C.T @ v
    if rs.a_orthonormal:
        return rs.U.T @ v
    return scipy.linalg.lu_solve(rs.E_lu, rs.U.T @ v, check_finite=False)


def apply_Q_complement(rs, v):
    """
    w = (I - Q) v with one re-projection pass.
    :return: (w, coeffs) where Q v = C coeffs.
    """
    v = np.asarray(v, dtype=np.float64)
    if rs.is_empty:
        return v.copy(), np.zeros(0)
    coeffs = coefficients(rs, v)
    w = v - rs.C @ coeffs
    correction = coefficients(rs, w)
    w = w - rs.C @ correction
    return w, coeffs + correction


def apply_P(rs, A, v):
    """ Sibling projector P v = U coeffs(A v); satisfies Q A = A P. """
    A = aslinearoperator(A)
    if rs.is_empty:
        return np.zeros(A.dim)
    return rs.U @ coefficients(rs, A.apply(v))


def complement_hook(rs):
    """ Projection hook for the Krylov drivers. """
    return partial(apply_Q_complement, rs)


def projected_operator(A, rs):
    """ (I - Q) A as a LinearOperator. """
    A = aslinearoperator(A)
    return LinearOperator(A.dim, lambda v: apply_Q_complement(rs, A.apply(v))[0],
                          norm_hint=A.norm_hint, name=f"(I-Q){A.name}")


def prepare_recycle(A, U_raw, variant=RecycleVariant.ORTHOGONAL, rank_tol=DEFAULT_RANK_TOL,
                    max_dim=DEFAULT_MAX_DIM, a_orthonormalize=False, products=None,
                    cond_max=DEFAULT_PENCIL_COND_MAX):
    """
    Normalizes a raw augmentation basis against A.

    :param A: Operator the space is prepared for.
    :param U_raw: n x k candidate basis.
    :param variant: RecycleVariant.
    :param rank_tol: Relative tolerance for dropping dependent columns.
    :param max_dim: Cap on k.
    :param a_orthonormalize: Oblique variants only; rescale U so that U^T A U = I (A SPD).
    :param products: Precomputed A U_raw; when given no matvecs are spent.
    :return: RecycleSpace; ``prepare_matvecs`` records the products computed here.
    :raises EmptyRecycleSpace: when every column is dropped.
    """
    A = aslinearoperator(A)
    variant = RecycleVariant(variant)
    U_raw = as_finite_matrix(U_raw, "recycle basis")
    if U_raw.shape[0] != A.dim:
        raise InvalidInput(f"recycle basis has {U_raw.shape[0]} rows, operator dimension is {A.dim}")
    k = U_raw.shape[1]
    if k == 0:
        return RecycleSpace.empty(A.dim, variant)
    if k > max_dim:
        raise InvalidInput(f"recycle dimension {k} exceeds cap {max_dim}")

    matvecs = 0
    if products is None:
        AU = A.matmat(U_raw)
        matvecs = k
    else:
        AU = as_finite_matrix(products, "recycle products")
        if AU.shape != U_raw.shape:
            raise InvalidInput(f"products shape {AU.shape} does not match basis shape {U_raw.shape}")

    if variant is RecycleVariant.ORTHOGONAL:
        if a_orthonormalize:
            raise InvalidInput("a_orthonormalize applies to the oblique variants only")
        qr = thin_qr(AU, rank_tol)
        if qr.rank == 0:
            raise EmptyRecycleSpace("A U has numerical rank 0")
        R = qr.r[:, qr.kept]
        U = scipy.linalg.solve_triangular(R.T, U_raw[:, qr.kept].T, lower=True).T
        _log_drop(k, qr.rank)
        return RecycleSpace(U, qr.q, variant, prepare_matvecs=matvecs)

    qr = thin_qr(U_raw, rank_tol)
    if qr.rank == 0:
        raise EmptyRecycleSpace("U has numerical rank 0")
    R = qr.r[:, qr.kept]
    U = qr.q
    C = scipy.linalg.solve_triangular(R.T, AU[:, qr.kept].T, lower=True).T
    E = U.T @ C

    if a_orthonormalize:
        values, vectors = scipy.linalg.eigh(0.5 * (E + E.T))
        if values[-1] <= 0.0 or values[0] < -rank_tol * values[-1]:
            raise NotPositiveDefinite("U^T A U is not positive definite")
        keep = values > rank_tol * values[-1]
        scale = vectors[:, keep] / np.sqrt(values[keep])
        U, C = U @ scale, C @ scale
        _log_drop(k, U.shape[1])
        return RecycleSpace(U, C, variant, E=np.eye(U.shape[1]), a_orthonormal=True, prepare_matvecs=matvecs)

    _, sing, right = svd_small(E)
    if sing[0] == 0.0:
        raise EmptyRecycleSpace("U^T A U vanishes")
    keep = sing > rank_tol * sing[0]
    if not np.all(keep):
        U, C = U @ right[:, keep], C @ right[:, keep]
        E = U.T @ C
    cond = np.linalg.cond(E)
    if not np.isfinite(cond) or cond > cond_max:
        raise IllConditionedPencil(f"U^T A U condition estimate {cond:.3e} exceeds {cond_max:.1e}")
    _log_drop(k, U.shape[1])
    return RecycleSpace(U, C, variant, E=E, E_lu=scipy.linalg.lu_factor(E), prepare_matvecs=matvecs)


def convert_recycle(A, rs, variant, a_orthonormalize=False, rank_tol=DEFAULT_RANK_TOL):
    """ Re-prepares an existing space for another variant using its stored products (no matvecs). """
    variant = RecycleVariant(variant)
    if rs.variant is variant and rs.a_orthonormal == a_orthonormalize:
        return rs
    if rs.is_empty:
        return RecycleSpace.empty(rs.n, variant)
    return prepare_recycle(A, rs.U, variant, rank_tol=rank_tol, max_dim=max(rs.k, 1),
                           a_orthonormalize=a_orthonormalize, products=rs.C)


def _log_drop(requested, kept):
    if kept < requested:
        logger.warning("⚠️ Recycle space reduced from %d to %d columns (numerical dependence)", requested, kept)


class ProjectedArnoldiState(ArnoldiState):
    """ Arnoldi state for (I - Q) A; ``B`` holds the captured Q-coefficients of A v_l. """

    def __init__(self, rs, capacity, start):
        super().__init__(rs.n, capacity, start, ncoeffs=rs.k)
        self.rs = rs

    @property
    def B(self):
        return self.coeffs


def projected_arnoldi_extend(A, rs, state, norm_a):
    """ One Arnoldi step on (I - Q) A recording column j of B. """
    return arnoldi_extend(A, state, norm_a, project=complement_hook(rs))


def assemble_solution(rs, x0, r0, V_j, y_j, B_j, c0=None):
    """
    x_j = x0 + V_j y_j + U (c0 - B_j y_j) with c0 = coeffs(r0).
    :param c0: Precomputed Q-coefficients of r0, if available.
    """
    x = np.asarray(x0, dtype=np.float64) + V_j @ y_j
    if rs.is_empty:
        return x
    if c0 is None:
        c0 = coefficients(rs, r0)
    z = c0 - (B_j @ y_j if y_j.size else 0.0)
    return x + rs.U @ z


def residual_consistency_check(A, b, x_j, inner_resnorm, debug_checks=None):
    """
    |‖b - A x_j‖ - inner_resnorm|; raises InvariantViolation in debug mode when
    it exceeds 1e-8 ‖b‖.
    """
    A = aslinearoperator(A)
    b = np.asarray(b, dtype=np.float64)
    discrepancy = abs(float(np.linalg.norm(b - A.apply(x_j))) - float(inner_resnorm))
    if debug_checks_enabled(debug_checks) and discrepancy > RESIDUAL_GAP_TOL * float(np.linalg.norm(b)):
        raise InvariantViolation(f"residual identity violated: discrepancy {discrepancy:.3e}")
    return discrepancy


def recycle_invariants(A, rs):
    """
    Measures the defining identities of a prepared space.
    :return: dict with 'relation' (‖A U - C‖ / (‖A‖ ‖U‖)) and either 'orthonormality'
             (‖C^T C - I‖) or 'pencil' (‖U^T C - E‖) with 'cond'.
    """
    A = aslinearoperator(A)
    if rs.is_empty:
        return {"k": 0, "relation": 0.0}
    scale = operator_norm(A) * max(np.linalg.norm(rs.U, 2), np.finfo(float).tiny)
    result = {"k": rs.k, "relation": float(np.linalg.norm(A.matmat(rs.U) - rs.C)) / scale}
    if rs.variant is RecycleVariant.ORTHOGONAL:
        result["orthonormality"] = float(np.linalg.norm(rs.C.T @ rs.C - np.eye(rs.k)))
    else:
        result["pencil"] = float(np.linalg.norm(rs.U.T @ rs.C - rs.E))
        result["cond"] = float(np.linalg.cond(rs.E))
    return result
