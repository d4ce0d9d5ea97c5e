"""
Invariant suite behind ``recyklos verify``.

Every system of a manifest is checked for GMRES optimality against the
brute-force oracle, the Arnoldi relation, the defining identities of a
prepared recycle space and the full-residual identity of recycled GMRES.
Symmetric systems additionally check MINRES against full GMRES and the
shift invariance of the projected Krylov space.
"""
import logging
from dataclasses import dataclass

import numpy as np

from core.dense_core import thin_qr
from core.krylov_base import ArnoldiState, arnoldi_extend, check_arnoldi_state, gmres, minres
from core.manifest import load_system
from core.oracle import bruteforce_min_residual, densify, subspace_angles
from core.recycle_core import (
    ProjectedArnoldiState,
    RecycleVariant,
    prepare_recycle,
    projected_arnoldi_extend,
    projected_operator,
    recycle_invariants,
)
from core.recycle_solvers import rgmres_gcrodr
from core.sparse_io import aslinearoperator, operator_norm
from utilities.config_loader import DEFAULT_CONFIG
from utilities.error_handler import InvariantViolation, RecyklosError

logger = logging.getLogger(__name__)

OPTIMALITY_TOL = 1e-7
RELATION_TOL = 1e-10
RECYCLE_TOL = 1e-10
EQUIVALENCE_TOL = 1e-7
ANGLE_TOL = 1e-8
SHIFTS = (0.1, 1.0, 10.0)


@dataclass
class CheckResult:
    system: int
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def to_dict(self):
        return {"system": self.system, "name": self.name, "passed": self.passed, "value": self.value,
                "threshold": self.threshold, "detail": self.detail}


def _krylov_basis(A, r0, steps):
    """ Orthonormal basis of K_steps(A, r0) built column by column with thin_qr. """
    Q = thin_qr(r0[:, None], 0.0).q
    for _ in range(steps - 1):
        w = A.apply(Q[:, -1])
        qr = thin_qr(np.column_stack([Q, w]), 1e-14)
        if qr.rank <= Q.shape[1]:
            break
        Q = qr.q
    return Q


def check_gmres_optimality(index, A, b, steps, oracle_limits=None):
    """ Per-iteration GMRES residuals against the brute-force minimum over K_j(A, b). """
    limits = {**DEFAULT_CONFIG["oracle"], **(oracle_limits or {})}
    report = gmres(A, b, m=steps, tol=1e-14, maxit=steps)
    basis = _krylov_basis(A, b, report.iterations)
    M = densify(A, limits["dense_max"])
    worst = 0.0
    norm_b = float(np.linalg.norm(b))
    for j in range(1, min(report.iterations, basis.shape[1]) + 1):
        best, _ = bruteforce_min_residual(M, b, None, basis[:, :j], max_basis=limits["max_basis"],
                                          dense_max=limits["dense_max"])
        worst = max(worst, abs(report.resnorms[j] - best) / norm_b)
    return CheckResult(index, "gmres_optimality", worst <= OPTIMALITY_TOL, worst, OPTIMALITY_TOL,
                       f"{report.iterations} iterations")


def check_arnoldi_relation(index, A, b, steps):
    state = ArnoldiState(A.dim, steps, b)
    norm_a = operator_norm(A)
    while state.j < steps and not state.breakdown:
        arnoldi_extend(A, state, norm_a)
    ortho, relation = check_arnoldi_state(A, state, norm_a, raise_on_violation=False)
    value = max(ortho, relation)
    return CheckResult(index, "arnoldi_relation", value <= RELATION_TOL, value, RELATION_TOL,
                       f"ortho={ortho:.2e}, relation={relation:.2e}")


def check_recycle_space(index, A, rs):
    measured = recycle_invariants(A, rs)
    value = max(measured["relation"], measured.get("orthonormality", 0.0))
    return CheckResult(index, "recycle_invariants", value <= RECYCLE_TOL, value, RECYCLE_TOL, f"k={rs.k}")


def check_residual_identity(index, A, b, rs, steps):
    """ Recycled GMRES with debug checks on; passes iff no step violates the residual identity. """
    try:
        report, _ = rgmres_gcrodr(A, b, rs=rs, m=steps, tol=1e-12, maxit=2 * steps, debug_checks=True)
    except InvariantViolation as e:
        return CheckResult(index, "residual_identity", False, np.inf, 1e-8, str(e))
    return CheckResult(index, "residual_identity", True, 0.0, 1e-8, f"{report.iterations} iterations")


def check_minres_gmres(index, A, b, steps):
    """ Unrestarted GMRES and MINRES residual histories agree on symmetric systems. """
    g = gmres(A, b, m=steps, tol=1e-14, maxit=steps)
    r = minres(A, b, tol=1e-14, maxit=steps)
    count = min(len(g.resnorms), len(r.resnorms))
    gap = float(np.max(np.abs(np.subtract(g.resnorms[:count], r.resnorms[:count])))) / float(np.linalg.norm(b))
    return CheckResult(index, "minres_equals_gmres", gap <= EQUIVALENCE_TOL, gap, EQUIVALENCE_TOL,
                       f"{count} residuals compared")


def check_shift_invariance(index, A, rs, seed=0, steps=5):
    """
    K_steps((I-Q)A, v) and K_steps((I-Q)(A + gamma I), v) coincide for v orthogonal to C.
    The unshifted space comes from the projected Arnoldi used by the solvers, the shifted
    ones from plain Arnoldi on the projected operator.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.dim)
    v -= rs.C @ (rs.C.T @ v)
    norm_a = operator_norm(A)
    base = ProjectedArnoldiState(rs, steps, v)
    while base.j < steps and not base.breakdown:
        projected_arnoldi_extend(A, rs, base, norm_a)
    worst = 0.0
    for gamma in SHIFTS:
        shifted = projected_operator(A.shifted(gamma), rs)
        state = ArnoldiState(A.dim, steps, v)
        while state.j < steps and not state.breakdown:
            arnoldi_extend(shifted, state, operator_norm(shifted))
        angles = subspace_angles(base.V[:, : base.j], state.V[:, : state.j])
        worst = max(worst, float(angles.max()) if angles.size else 0.0)
    return CheckResult(index, "shift_invariance", worst <= ANGLE_TOL, worst, ANGLE_TOL, f"shifts {list(SHIFTS)}")


def verify_system(index, A, b, symmetric=False, steps=20, k=4, seed=0, config=None):
    """
    Runs the invariant suite on one system.
    :param config: Loaded configuration; its oracle section bounds the brute-force checks.
    :return: List of CheckResult; systems larger than oracle.dense_max skip the optimality check.
    """
    limits = {**DEFAULT_CONFIG["oracle"], **(config or {}).get("oracle", {})}
    A = aslinearoperator(A, symmetric=symmetric)
    steps = max(1, min(steps, A.dim - 1 if A.dim > 1 else 1, limits["max_basis"]))
    k = min(k, max(A.dim // 4, 1))
    results = []
    if A.dim <= limits["dense_max"]:
        results.append(check_gmres_optimality(index, A, b, steps, limits))
    results.append(check_arnoldi_relation(index, A, b, steps))

    rng = np.random.default_rng(seed)
    rs = prepare_recycle(A, rng.standard_normal((A.dim, k)), RecycleVariant.ORTHOGONAL)
    results.append(check_recycle_space(index, A, rs))
    results.append(check_residual_identity(index, A, b, rs, steps))
    if symmetric:
        results.append(check_minres_gmres(index, A, b, steps))
        results.append(check_shift_invariance(index, A, rs, seed=seed))
    return results


def verify_manifest(manifest, steps=20, k=4, seed=0, config=None):
    """
    Runs the suite on every system of a manifest; errors are reported as failed checks.
    :return: List of CheckResult.
    """
    results = []
    for index, system in enumerate(manifest.systems):
        A, b = load_system(manifest, index)
        try:
            results.extend(verify_system(index, A, b, symmetric=system.symmetric, steps=steps, k=k, seed=seed,
                                         config=config))
        except RecyklosError as e:
            logger.error("❌ system %d: verification aborted: %s", index, e)
            results.append(CheckResult(index, "verification", False, np.inf, 0.0, f"{type(e).__name__}: {e}"))
    passed = sum(r.passed for r in results)
    logger.info("Verification: %d/%d checks passed", passed, len(results))
    return results
