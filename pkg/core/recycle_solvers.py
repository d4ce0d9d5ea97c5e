"""
Recycled Krylov solvers.

rgmres_gcrodr
    GCRO-DR: GMRES on (I - C C^T) A, blockwise least squares (y from the
    Hessenberg problem, then z = C^T r0 - B y), harmonic Ritz re-selection at
    every cycle end. With ``oblique=True`` the same driver runs the ObliqueMR
    configuration (Q = A U (U^T A U)^{-1} U^T).
rfom
    FOM on (I - Q) A with the oblique Galerkin projector.
rminres / rcg
    Short recurrences on the projected operator with a single deferred U
    correction; a rolling window of recent vectors feeds Ritz re-selection.
solve_shifted_family
    One projected Lanczos basis shared by every shift A + gamma I.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from joblib import Parallel, delayed

from core.dense_core import DEFAULT_PENCIL_COND_MAX, DEFAULT_RANK_TOL, thin_qr
from core.krylov_base import (
    DEFAULT_MAXIT,
    DEFAULT_RESTART,
    DEFAULT_TOL,
    ShortRecurrenceState,
    SolveReport,
    Termination,
    VectorWindow,
    cg_recurrence,
    declared_operator,
    finish_short_recurrence,
    minres_recurrence,
    prepare_problem,
    run_arnoldi_cycle,
    spot_check_positive,
    spot_check_symmetric,
    _check_finite,
)
from core.recycle_core import (
    ProjectedArnoldiState,
    RecycleSpace,
    RecycleVariant,
    apply_Q_complement,
    assemble_solution,
    complement_hook,
    convert_recycle,
    prepare_recycle,
    projected_arnoldi_extend,
    residual_consistency_check,
)
from core.sparse_io import operator_norm
from strategies.harmonic_ritz import harmonic_ritz_select, ritz_select
from strategies.ritz_window import ritz_window_select
from strategies.selector_spec import SelectorKind
from utilities.config_loader import debug_checks_enabled
from utilities.error_handler import ConvergenceFailure, EmptyRecycleSpace, InvalidInput

logger = logging.getLogger(__name__)

__all__ = [
    "ShiftedFamily",
    "ShortRecurrenceState",
    "rcg",
    "rfom",
    "rgmres_gcrodr",
    "rminres",
    "solve_shifted_family",
]

IN_SOLVE_KINDS = (SelectorKind.HARMONIC_RITZ, SelectorKind.RITZ)


def _initial_space(A, rs, variant, a_orthonormalize=False):
    if rs is None:
        return RecycleSpace.empty(A.dim, variant)
    if rs.n != A.dim:
        raise InvalidInput(f"recycle space dimension {rs.n} does not match operator dimension {A.dim}")
    if rs.variant is not variant or rs.a_orthonormal != a_orthonormalize:
        logger.debug("Converting recycle space from %s to %s", rs.variant.value, RecycleVariant(variant).value)
        return convert_recycle(A, rs, variant, a_orthonormalize=a_orthonormalize)
    return rs


def _reprepare(A, selection, variant, rank_tol):
    try:
        return prepare_recycle(A, selection.vectors, variant, rank_tol=rank_tol,
                               max_dim=max(selection.k, 1), products=selection.products)
    except EmptyRecycleSpace as e:
        logger.warning("⚠️ Selected recycle space is empty (%s); continuing with k = 0", e)
        return RecycleSpace.empty(A.dim, variant)


def _recycled_restarted(A, b, x, rs, m, tol, maxit, inner, selector, debug, rank_tol, name):
    if m < 1:
        raise InvalidInput("restart length m must be at least 1")
    if tol <= 0:
        raise InvalidInput("tol must be positive")
    norm_a = operator_norm(A)
    norm_b = float(np.linalg.norm(b))
    target = tol * norm_b
    k_initial = rs.k

    r = b - A.apply(x)
    matvecs = 1
    resnorms = [float(np.linalg.norm(r))]
    _check_finite(resnorms, "initial residual")
    iterations = 0
    cycles = 0
    termination = Termination.TOLERANCE if resnorms[0] <= target else Termination.MAXITER

    while termination is not Termination.TOLERANCE and iterations < maxit:
        r_hat, c0 = apply_Q_complement(rs, r)
        if float(np.linalg.norm(r_hat)) <= target:
            x = x + rs.U @ c0
            r = b - A.apply(x)
            matvecs += 1
            resnorms.append(float(np.linalg.norm(r)))
            termination = Termination.TOLERANCE
            break

        cycle_len = min(m, maxit - iterations)
        state = ProjectedArnoldiState(rs, cycle_len, r_hat)
        on_step = None
        if debug:
            on_step = _residual_tracker(A, b, x, r, rs, c0)
        cycle = run_arnoldi_cycle(A, state, target, norm_a, inner=inner, project=complement_hook(rs),
                                  debug=debug, on_step=on_step)
        matvecs += cycle.steps
        iterations += cycle.steps
        cycles += 1
        resnorms.extend(cycle.estimates)

        used = cycle.y.size
        x = assemble_solution(rs, x, r, state._V[:, :used], cycle.y, state.B[:, :used], c0=c0)
        r = b - A.apply(x)
        matvecs += 1
        resnorm = float(np.linalg.norm(r))
        _check_finite([resnorm], "true residual")
        resnorms[-1] = resnorm
        logger.debug("%s cycle %d: k=%d, %d steps, residual %.3e", name, cycles, rs.k, cycle.steps, resnorm)

        if selector is not None and selector.active and selector.kind in IN_SOLVE_KINDS:
            k_select = min(selector.k, rs.k + state.j)
            if selector.kind is SelectorKind.HARMONIC_RITZ:
                selection = harmonic_ritz_select(rs, state, k_select, selector.which, cond_max=selector.cond_max,
                                                 cap=selector.eig_cap)
            else:
                selection = ritz_select(rs, state, k_select, selector.which, cap=selector.eig_cap)
            rs = _reprepare(A, selection, rs.variant, rank_tol)

        if resnorm <= target:
            termination = Termination.TOLERANCE
        elif cycle.breakdown:
            termination = Termination.BREAKDOWN
            break

    report = SolveReport(x=x, resnorms=resnorms, matvecs=matvecs, iterations=iterations,
                         converged=resnorms[-1] <= target, termination=termination,
                         info={"cycles": cycles, "restart": m, "recycle_dim": k_initial, "recycle_dim_next": rs.k})
    logger.info("%s: %d iterations, k=%d, residual %.3e (%s)", name, iterations, k_initial, resnorms[-1],
                termination.value)
    return report, rs


def _residual_tracker(A, b, x0, r0, rs, c0):
    def track(state, y, estimate):
        used = y.size
        x_j = assemble_solution(rs, x0, r0, state._V[:, :used], y, state.B[:, :used], c0=c0)
        residual_consistency_check(A, b, x_j, estimate, debug_checks=True)
    return track


def rgmres_gcrodr(A, b, x0=None, rs=None, m=DEFAULT_RESTART, tol=DEFAULT_TOL, maxit=DEFAULT_MAXIT,
                  selector=None, oblique=False, rank_tol=DEFAULT_RANK_TOL, debug_checks=None):
    """
    Recycled GMRES (GCRO-DR).

    :param A: Operator.
    :param b: Right-hand side.
    :param x0: Initial guess.
    :param rs: RecycleSpace (None or empty for k = 0); converted to the required variant without matvecs.
    :param m: Restart length.
    :param tol: Relative tolerance.
    :param maxit: Maximum number of iterations.
    :param selector: SelectorSpec; HarmonicRitz or Ritz re-select the space at every cycle end.
    :param oblique: Run the ObliqueMR configuration instead of the orthogonal one.
    :return: (SolveReport, RecycleSpace for the next cycle or system).
    """
    A, b, x = prepare_problem(A, b, x0)
    variant = RecycleVariant.OBLIQUE_MR if oblique else RecycleVariant.ORTHOGONAL
    rs = _initial_space(A, rs, variant)
    name = "rgmres_oblique" if oblique else "rgmres"
    return _recycled_restarted(A, b, x, rs, m, tol, maxit, "gmres", selector,
                               debug_checks_enabled(debug_checks), rank_tol, name)


def rfom(A, b, x0=None, rs=None, m=DEFAULT_RESTART, tol=DEFAULT_TOL, maxit=DEFAULT_MAXIT,
         rank_tol=DEFAULT_RANK_TOL, debug_checks=None):
    """
    Recycled FOM with Q = A U (U^T A U)^{-1} U^T.
    :raises IllConditionedPencil: when U^T A U is numerically singular.
    :return: SolveReport.
    """
    A, b, x = prepare_problem(A, b, x0)
    rs = _initial_space(A, rs, RecycleVariant.OBLIQUE_FOM)
    report, _ = _recycled_restarted(A, b, x, rs, m, tol, maxit, "fom", None,
                                    debug_checks_enabled(debug_checks), rank_tol, "rfom")
    return report


class _WindowRefresher:
    """ Overwrites U_next by Ritz vectors of span(U_next) + span(window) whenever the window fills. """

    def __init__(self, rs, selector):
        self.selector = selector
        self.U = rs.U.copy()
        self.AU = rs.C.copy()
        self.refreshes = 0

    def __call__(self, window):
        selection = ritz_window_select(self.U, self.AU, window.vectors(), window.products(),
                                       self.selector.k, self.selector.which, cap=self.selector.eig_cap)
        self.U, self.AU = selection.vectors, selection.products
        self.refreshes += 1
        window.clear()

    def finish(self, window):
        if len(window):
            self(window)


def _short_recycled(A, b, x, rs, tol, maxit, selector, debug, rank_tol, recurrence, name):
    norm_a = operator_norm(A)
    norm_b = float(np.linalg.norm(b))
    target = tol * norm_b

    r0 = b - A.apply(x)
    resnorms = [float(np.linalg.norm(r0))]
    _check_finite(resnorms, "initial residual")
    if resnorms[0] <= target:
        report = SolveReport(x, resnorms, 1, 0, True, Termination.TOLERANCE, info={"recycle_dim": rs.k})
        return report, rs

    r_hat, c0 = apply_Q_complement(rs, r0)
    window = refresher = None
    if selector is not None and selector.active and selector.kind in IN_SOLVE_KINDS:
        window = VectorWindow(selector.p)
        refresher = _WindowRefresher(rs, selector)

    on_step = None
    if debug:
        def on_step(dx, z_acc, estimate):
            x_j = x + dx + rs.U @ (c0 - z_acc)
            residual_consistency_check(A, b, x_j, estimate, debug_checks=True)

    if float(np.linalg.norm(r_hat)) <= target:
        result = recurrence(A, np.zeros_like(r_hat), 0, target, rs)
    else:
        result = recurrence(A, r_hat, maxit, target, rs, window=window, on_window_full=refresher, on_step=on_step)
    x = x + result.dx + rs.U @ (c0 - result.z_acc)
    resnorms.extend(result.estimates)
    resnorms, matvecs, converged = finish_short_recurrence(A, b, x, norm_b, target, resnorms, 1 + result.steps,
                                                           result, name, debug)

    rs_next = rs
    if refresher is not None:
        refresher.finish(window)
        selection_k = refresher.U.shape[1]
        rs_next = RecycleSpace.empty(A.dim)
        if selection_k:
            try:
                rs_next = prepare_recycle(A, refresher.U, RecycleVariant.ORTHOGONAL, rank_tol=rank_tol,
                                          max_dim=selection_k, products=refresher.AU)
            except EmptyRecycleSpace as e:
                logger.warning("⚠️ Ritz window produced an empty space (%s); next solve uses k = 0", e)
    info = {"recycle_dim": rs.k, "recycle_dim_next": rs_next.k,
            "window_refreshes": refresher.refreshes if refresher else 0}
    logger.info("%s: %d iterations, k=%d, residual %.3e (%s)", name, result.steps, rs.k, resnorms[-1],
                result.termination.value)
    return SolveReport(x, resnorms, matvecs, result.steps, converged, result.termination, info=info), rs_next


def rminres(A, b, x0=None, rs=None, tol=DEFAULT_TOL, maxit=DEFAULT_MAXIT, selector=None,
            rank_tol=DEFAULT_RANK_TOL, debug_checks=None):
    """
    Recycled MINRES for symmetric (possibly indefinite) operators.

    Lanczos runs on (I - C C^T) A; the U terms are applied once at the end:
    x = x0 + W t + U C^T r0 - U B R^{-1} t.

    :param selector: SelectorSpec; Ritz or HarmonicRitz enable the rolling window of p Lanczos vectors.
    :return: (SolveReport, RecycleSpace for the next system).
    """
    A = declared_operator(A, symmetric=True, spd=False)
    A, b, x = prepare_problem(A, b, x0)
    spot_check_symmetric(A)
    rs = _initial_space(A, rs, RecycleVariant.ORTHOGONAL)
    norm_a = operator_norm(A)

    def recurrence(op, r_hat, maxit_, target, space, **kwargs):
        return minres_recurrence(op, r_hat, maxit_, target, norm_a, project=complement_hook(space), k=space.k,
                                 **kwargs)

    return _short_recycled(A, b, x, rs, tol, maxit, selector, debug_checks_enabled(debug_checks), rank_tol,
                           recurrence, "rminres")


def rcg(A, b, x0=None, rs=None, tol=DEFAULT_TOL, maxit=DEFAULT_MAXIT, selector=None,
        rank_tol=DEFAULT_RANK_TOL, debug_checks=None):
    """
    Recycled CG for SPD operators.

    The incoming space is A-orthonormalized (U^T A U = I) so the Galerkin
    projector Q = C U^T needs no small solve; CG then runs on the symmetric
    semi-definite operator A - C C^T, and the solution is
    x = x0 + U U^T r0 + t - U (U^T A t).

    :return: (SolveReport, Orthogonal RecycleSpace for the next system).
    """
    A = declared_operator(A, symmetric=True, spd=True)
    A, b, x = prepare_problem(A, b, x0)
    spot_check_positive(A)
    rs = _initial_space(A, rs, RecycleVariant.OBLIQUE_FOM, a_orthonormalize=True)

    def recurrence(op, r_hat, maxit_, target, space, **kwargs):
        return cg_recurrence(op, r_hat, maxit_, target, project=complement_hook(space), k=space.k, **kwargs)

    return _short_recycled(A, b, x, rs, tol, maxit, selector, debug_checks_enabled(debug_checks), rank_tol,
                           recurrence, "rcg")


@dataclass
class ShiftedFamily:
    """ (A + gamma_l I) x = b for distinct real shifts; gamma = 0 must be present. """
    A: object
    b: np.ndarray
    shifts: list
    xi: float = field(default=None, init=False)

    def __post_init__(self):
        self.A = declared_operator(self.A, symmetric=True, spd=False)
        self.b = np.asarray(self.b, dtype=np.float64).ravel()
        self.shifts = [float(s) for s in self.shifts]
        if not self.shifts:
            raise InvalidInput("a shifted family needs at least one shift")
        if len(set(self.shifts)) != len(self.shifts):
            raise InvalidInput(f"shifts must be distinct, got {self.shifts}")
        if 0.0 not in self.shifts:
            raise InvalidInput("shift 0 must be part of the family")
        if self.b.size != self.A.dim:
            raise InvalidInput(f"rhs length {self.b.size} does not match operator dimension {self.A.dim}")


def _shift_system(gamma, j, state, rs, Ctb, CtU, VtU, N, xi, form):
    """ Assembles the augmented least-squares matrix and rhs for one shift and basis size j. """
    k = rs.k
    Hbar = state._H[: j + 1, :j] + gamma * np.eye(j + 1, j)
    B = state.B[:, :j]
    if form == "right":
        top = np.hstack([np.eye(k) + gamma * CtU, B])
        bottom = np.hstack([np.zeros((j + 1, k)), Hbar])
        M = np.vstack([top, bottom])
        rhs = np.concatenate([Ctb, xi * np.eye(j + 1)[:, 0]])
        return M, rhs, k
    rows = [np.hstack([Hbar, gamma * VtU[: j + 1]]), np.hstack([B, np.eye(k) + gamma * CtU])]
    rhs = [xi * np.eye(j + 1)[:, 0], Ctb]
    if k:
        # part of U outside span[V_{j+1} C]: unused Lanczos directions plus the final complement
        rest = np.vstack([VtU[j + 1:], N])
        rows.append(np.hstack([np.zeros((rest.shape[0], j)), gamma * rest]))
        rhs.append(np.zeros(rest.shape[0]))
    return np.vstack(rows), np.concatenate(rhs), 0


def _solve_shift(gamma, fam, state, rs, Ctb, CtU, VtU, N, xi, form, target, cond_max):
    A_shift = fam.A.shifted(gamma)
    resnorms = [float(np.linalg.norm(fam.b))]
    info = {"shift": gamma, "form": form}
    x = np.zeros(fam.A.dim)
    try:
        if resnorms[0] <= target:
            return SolveReport(x, resnorms, 0, 0, True, Termination.TOLERANCE, info=info)
        sol, used, cond = None, 0, 1.0
        for j in range(min(1, state.j), state.j + 1):
            M, rhs, z_first = _shift_system(gamma, j, state, rs, Ctb, CtU, VtU, N, xi, form)
            try:
                sol, _, _, sing = scipy.linalg.lstsq(M, rhs)
            except np.linalg.LinAlgError as e:
                raise ConvergenceFailure(f"shift {gamma:g}: least squares failed ({e})") from e
            cond = float(sing[0] / sing[-1]) if sing[-1] > 0 else np.inf
            if cond > cond_max:
                raise ConvergenceFailure(f"shift {gamma:g}: least-squares condition estimate {cond:.3e}")
            resnorms.append(float(np.linalg.norm(rhs - M @ sol)))
            used = j
            if resnorms[-1] <= target:
                break
        k = rs.k
        if z_first:
            z, y = sol[:k], sol[k:]
        else:
            y, z = sol[:used], sol[used:]
        x = state._V[:, :used] @ y + rs.U @ z
        true = float(np.linalg.norm(fam.b - A_shift.apply(x)))
        resnorms[-1] = true
        info["ls_cond"] = cond
        termination = Termination.TOLERANCE if true <= target else (
            Termination.BREAKDOWN if state.breakdown else Termination.MAXITER)
        return SolveReport(x, resnorms, 1, used, true <= target, termination, info=info)
    except ConvergenceFailure as e:
        logger.warning("⚠️ %s", e)
        info["error"] = str(e)
        return SolveReport(x, resnorms, 0, len(resnorms) - 1, False, Termination.BREAKDOWN, info=info)


def solve_shifted_family(fam, rs=None, m=DEFAULT_RESTART, tol=DEFAULT_TOL, form="right", n_jobs=1,
                         cond_max=DEFAULT_PENCIL_COND_MAX):
    """
    Solves every shifted system from one projected Lanczos basis.

    The basis of (I - C C^T) A is built once (with full reorthogonalization) from
    v1 = (I - C C^T) b / xi, then each shift solves its own small augmented
    least-squares problem:

    right form (default)
        [[I + gamma C^T U, B_m], [0, T_m + gamma I]] [z; y] ~ [C^T b; xi e1]
    left form
        [[T_m + gamma I, gamma V^T U], [B_m, I + gamma C^T U], [0, gamma N]] [y; z] ~ [xi e1; C^T b; 0]
        with N from the QR of (I - [V C][V C]^T) U.

    Per-shift back-solves run in parallel through joblib when n_jobs != 1.

    :return: One SolveReport per shift, in family order. The shared basis matvecs
             are charged to the gamma = 0 report; every report carries them in
             info["shared_basis_matvecs"].
    """
    if form not in ("right", "left"):
        raise InvalidInput(f"unknown least-squares form '{form}'")
    if m < 1:
        raise InvalidInput("basis size m must be at least 1")
    A = fam.A
    spot_check_symmetric(A)
    rs = _initial_space(A, rs, RecycleVariant.ORTHOGONAL)
    norm_a = operator_norm(A)
    target = tol * float(np.linalg.norm(fam.b))

    b_hat, Ctb = apply_Q_complement(rs, fam.b)
    xi = float(np.linalg.norm(b_hat))
    fam.xi = xi
    state = ProjectedArnoldiState(rs, min(m, A.dim), b_hat)
    if xi > 0.0:
        while state.j < state.capacity and not state.breakdown:
            projected_arnoldi_extend(A, rs, state, norm_a)
    shared = state.j

    CtU = rs.C.T @ rs.U
    VtU = state.V.T @ rs.U
    N = np.zeros((0, rs.k))
    if form == "left" and rs.k:
        basis = np.column_stack([state.V, rs.C])
        residual = rs.U - basis @ (basis.T @ rs.U)
        N = thin_qr(residual, DEFAULT_RANK_TOL).r

    reports = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_solve_shift)(gamma, fam, state, rs, Ctb, CtU, VtU, N, xi, form, target, cond_max)
        for gamma in fam.shifts
    )
    for gamma, report in zip(fam.shifts, reports):
        report.info["shared_basis_matvecs"] = shared
        report.info["recycle_dim"] = rs.k
        report.info["xi"] = xi
        if gamma == 0.0:
            report.matvecs += shared
    logger.info("Shifted family: %d shifts, basis %d, k=%d, converged %d", len(fam.shifts), shared, rs.k,
                sum(r.converged for r in reports))
    return reports
