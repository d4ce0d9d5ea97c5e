"""
Non-recycled Krylov baselines: Arnoldi, Hermitian Lanczos, GMRES, FOM, MINRES and CG.

The iteration drivers accept an optional ``project`` hook ``w -> (w_hat, coeffs)``
applied to every operator product. The baselines leave it unset; the recycled
solvers pass the recycle-space complement projector so the same recurrences run
on (I - Q) A while the captured coefficients build the B matrix.
"""
import logging
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from core.dense_core import GivensLeastSquares, sym_tridiag_eig
from core.sparse_io import aslinearoperator, operator_norm
from utilities.config_loader import debug_checks_enabled
from utilities.error_handler import (
    InvalidInput,
    InvariantViolation,
    NotPositiveDefinite,
    NotSymmetric,
    NumericalFailure,
)

logger = logging.getLogger(__name__)

BREAKDOWN_TOL = 1e-14
ORTHO_TOL = 1e-10
RELATION_TOL = 1e-10
SYMMETRY_TOL = 1e-10
RESIDUAL_GAP_TOL = 1e-8

DEFAULT_RESTART = 50
DEFAULT_TOL = 1e-8
DEFAULT_MAXIT = 1000

_EMPTY = np.zeros(0)


class Termination(str, Enum):
    TOLERANCE = "Tolerance"
    MAXITER = "MaxIter"
    BREAKDOWN = "Breakdown"


@dataclass
class SolveReport:
    """
    Outcome of one solve.

    resnorms[0] is ||b - A x0||, followed by one entry per iteration. A
    recycled solve whose initial recycle projection already meets the target
    reports that projected residual as a second entry with zero iterations.
    """
    x: np.ndarray
    resnorms: list
    matvecs: int
    iterations: int
    converged: bool
    termination: Termination
    info: dict = field(default_factory=dict)

    @property
    def final_resnorm(self):
        return self.resnorms[-1]


def prepare_problem(op, b, x0, symmetric=False, spd=False):
    """
    Normalizes solver inputs.
    :return: (LinearOperator, b, x0 copy).
    """
    A = aslinearoperator(op, symmetric=symmetric, spd=spd)
    b = np.asarray(b, dtype=np.float64).ravel()
    if b.size != A.dim:
        raise InvalidInput(f"rhs length {b.size} does not match operator dimension {A.dim}")
    if not np.all(np.isfinite(b)):
        raise InvalidInput("rhs contains non-finite entries")
    if x0 is None:
        x = np.zeros(A.dim)
    else:
        x = np.array(x0, dtype=np.float64).ravel()
        if x.size != A.dim:
            raise InvalidInput(f"x0 length {x.size} does not match operator dimension {A.dim}")
        if not np.all(np.isfinite(x)):
            raise InvalidInput("x0 contains non-finite entries")
    return A, b, x


def _check_finite(values, where):
    if not np.all(np.isfinite(values)):
        raise NumericalFailure(f"non-finite values encountered in {where}")


class ArnoldiState:
    """
    Preallocated Arnoldi basis V, Hessenberg H and (optionally) the k x j
    coefficient block captured by a projection hook.
    """

    def __init__(self, n, capacity, start, ncoeffs=0):
        """
        :param n: Problem dimension.
        :param capacity: Maximum number of Arnoldi steps.
        :param start: Starting vector (normalized internally).
        :param ncoeffs: Length of the coefficient vectors returned by the projection hook.
        """
        start = np.asarray(start, dtype=np.float64).ravel()
        self.n = int(n)
        self.capacity = int(capacity)
        self.beta = float(np.linalg.norm(start))
        self._V = np.zeros((self.n, self.capacity + 1))
        self._H = np.zeros((self.capacity + 1, self.capacity))
        self._coeffs = np.zeros((int(ncoeffs), self.capacity))
        if self.beta > 0.0:
            self._V[:, 0] = start / self.beta
        self.j = 0
        self.breakdown = False

    @property
    def V(self):
        """ n x (j+1) basis; after a breakdown the trailing column is zero. """
        return self._V[:, : self.j + 1]

    @property
    def H(self):
        return self._H[: self.j + 1, : self.j]

    @property
    def coeffs(self):
        return self._coeffs[:, : self.j]

    def h_column(self, col):
        return self._H[: col + 2, col]

    def append(self, w, h, coeffs, norm_a):
        j = self.j
        h_next = float(np.linalg.norm(w))
        self._H[: j + 1, j] = h
        if self._coeffs.shape[0]:
            self._coeffs[:, j] = coeffs
        if h_next <= BREAKDOWN_TOL * norm_a:
            self._H[j + 1, j] = 0.0
            self.breakdown = True
        else:
            self._H[j + 1, j] = h_next
            self._V[:, j + 1] = w / h_next
        self.j = j + 1


def arnoldi_orthogonalize(V, w):
    """
    Modified Gram-Schmidt against the columns of V followed by one full
    reorthogonalization pass.
    :return: (w orthogonalized, accumulated coefficients).
    """
    h = np.zeros(V.shape[1])
    for i in range(V.shape[1]):
        h[i] = V[:, i] @ w
        w = w - h[i] * V[:, i]
    correction = V.T @ w
    w = w - V @ correction
    return w, h + correction


def arnoldi_extend(op, state, norm_a, project=None):
    """
    One Arnoldi step: w = op v_j, optionally projected, then orthogonalized.
    Happy breakdown is flagged on the state, never raised.
    :return: The updated state.
    """
    if state.j >= state.capacity:
        raise InvalidInput("Arnoldi capacity exhausted")
    if state.breakdown:
        raise InvalidInput("Arnoldi state already broke down")
    w = op.apply(state._V[:, state.j])
    coeffs = _EMPTY
    if project is not None:
        w, coeffs = project(w)
    _check_finite(w, "Arnoldi step")
    w, h = arnoldi_orthogonalize(state._V[:, : state.j + 1], w)
    state.append(w, h, coeffs, norm_a)
    return state


def check_arnoldi_state(op, state, norm_a, project=None, raise_on_violation=True):
    """
    Measures ||V^T V - I|| and the Arnoldi relation residual.
    :return: (orthogonality error, relative relation error).
    """
    j = state.j
    cols = j if state.breakdown else j + 1
    Vk = state._V[:, :cols]
    ortho = float(np.linalg.norm(Vk.T @ Vk - np.eye(cols)))
    products = np.zeros((state.n, j))
    for col in range(j):
        w = op.apply(state._V[:, col])
        products[:, col] = w if project is None else project(w)[0]
    relation = float(np.linalg.norm(products - state._V[:, : j + 1] @ state.H))
    relation /= max(norm_a, np.finfo(float).tiny)
    if raise_on_violation and (ortho > ORTHO_TOL or relation > RELATION_TOL):
        raise InvariantViolation(f"Arnoldi invariants violated at j={j}: ortho={ortho:.2e}, relation={relation:.2e}")
    return ortho, relation


@dataclass
class CycleResult:
    y: np.ndarray
    estimates: list
    steps: int
    breakdown: bool


def run_arnoldi_cycle(op, state, target, norm_a, inner="gmres", project=None, debug=False,
                      on_step: Optional[Callable] = None):
    """
    Runs up to ``state.capacity`` Arnoldi steps with a GMRES or FOM inner solve.
    :param target: Absolute residual target.
    :param inner: "gmres" (Hessenberg least squares) or "fom" (square Galerkin solve).
    :param on_step: Optional callback (state, y, estimate) after every step.
    :return: CycleResult with the coordinates of the last usable iterate.
    """
    givens = GivensLeastSquares([state.beta], state.capacity)
    estimates = []
    y = _EMPTY
    previous = state.beta
    while state.j < state.capacity and not state.breakdown:
        arnoldi_extend(op, state, norm_a, project=project)
        j = state.j
        if inner == "gmres":
            estimate = givens.add_column(state.h_column(j - 1))
        else:
            y_fom = _fom_coordinates(state)
            if y_fom is None:
                estimate = previous
            else:
                y = y_fom
                estimate = abs(state._H[j, j - 1] * y[-1])
        _check_finite([estimate], "residual estimate")
        estimates.append(estimate)
        previous = estimate
        if debug:
            check_arnoldi_state(op, state, norm_a, project=project)
        if on_step is not None:
            current = givens.solve()[0] if inner == "gmres" else y
            on_step(state, current, estimate)
        if estimate <= target:
            break
    if inner == "gmres":
        y = givens.solve()[0]
    return CycleResult(y=y, estimates=estimates, steps=state.j, breakdown=state.breakdown)


def _fom_coordinates(state):
    j = state.j
    Hj = state._H[:j, :j]
    rhs = np.zeros(j)
    rhs[0] = state.beta
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        try:
            lu, piv = scipy.linalg.lu_factor(Hj, check_finite=False)
        except (ValueError, np.linalg.LinAlgError):
            return None
    if np.any(np.diag(lu) == 0.0):
        logger.debug("FOM: H_%d singular, skipping update", j)
        return None
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def _restarted_krylov(op, b, x0, m, tol, maxit, inner, debug_checks):
    A, b, x = prepare_problem(op, b, x0)
    if m < 1:
        raise InvalidInput("restart length m must be at least 1")
    if tol <= 0:
        raise InvalidInput("tol must be positive")
    debug = debug_checks_enabled(debug_checks)
    norm_a = operator_norm(A)
    norm_b = float(np.linalg.norm(b))
    target = tol * norm_b

    r = b - A.apply(x)
    matvecs = 1
    resnorm = float(np.linalg.norm(r))
    _check_finite([resnorm], "initial residual")
    resnorms = [resnorm]
    iterations = 0
    termination = Termination.MAXITER
    cycles = 0

    if resnorm <= target:
        termination = Termination.TOLERANCE
    while termination is not Termination.TOLERANCE and iterations < maxit:
        cycle_len = min(m, maxit - iterations)
        state = ArnoldiState(A.dim, cycle_len, r)
        cycle = run_arnoldi_cycle(A, state, target, norm_a, inner=inner, debug=debug)
        matvecs += cycle.steps
        iterations += cycle.steps
        resnorms.extend(cycle.estimates)
        cycles += 1

        x = x + state._V[:, : cycle.y.size] @ cycle.y
        r = b - A.apply(x)
        matvecs += 1
        resnorm = float(np.linalg.norm(r))
        _check_finite([resnorm], "true residual")
        if debug and abs(resnorm - resnorms[-1]) > RESIDUAL_GAP_TOL * max(norm_b, 1.0):
            raise InvariantViolation(
                f"{inner}: true residual {resnorm:.3e} differs from estimate {resnorms[-1]:.3e}")
        resnorms[-1] = resnorm
        logger.debug("%s cycle %d: %d steps, residual %.3e", inner, cycles, cycle.steps, resnorm)

        if resnorm <= target:
            termination = Termination.TOLERANCE
        elif cycle.breakdown:
            termination = Termination.BREAKDOWN
            break

    report = SolveReport(x=x, resnorms=resnorms, matvecs=matvecs, iterations=iterations,
                         converged=resnorms[-1] <= target, termination=termination,
                         info={"cycles": cycles, "restart": m})
    logger.info("%s: %d iterations, residual %.3e (%s)", inner, iterations, resnorms[-1], termination.value)
    return report


def gmres(op, b, x0=None, m=DEFAULT_RESTART, tol=DEFAULT_TOL, maxit=DEFAULT_MAXIT, debug_checks=None):
    """
    Restarted GMRES.

    Residual norms inside a cycle come from the Givens recurrence; the last
    entry of every cycle is replaced by the true residual norm.

    :param op: Operator (CsrMatrix, array, scipy sparse or LinearOperator).
    :param b: Right-hand side.
    :param x0: Initial guess (zeros if None).
    :param m: Restart length.
    :param tol: Relative tolerance on ||b||.
    :param maxit: Maximum number of iterations (matvecs excluding residual evaluations).
    :return: SolveReport.
    """
    return _restarted_krylov(op, b, x0, m, tol, maxit, "gmres", debug_checks)


def fom(op, b, x0=None, m=DEFAULT_RESTART, tol=DEFAULT_TOL, maxit=DEFAULT_MAXIT, debug_checks=None):
    """
    Restarted full orthogonalization method: H_j y = beta e1 at every step.
    A singular H_j skips that step's update and repeats the previous residual norm.
    """
    return _restarted_krylov(op, b, x0, m, tol, maxit, "fom", debug_checks)


def spot_check_symmetric(op, trials=3, seed=0, norm_a=None):
    """ Raises NotSymmetric unless |u^T A v - v^T A u| <= 1e-10 ||A|| on random unit pairs. """
    rng = np.random.default_rng(seed)
    scale = operator_norm(op) if norm_a is None else norm_a
    for _ in range(trials):
        u = rng.standard_normal(op.dim)
        v = rng.standard_normal(op.dim)
        u /= np.linalg.norm(u)
        v /= np.linalg.norm(v)
        gap = abs(u @ op.apply(v) - v @ op.apply(u))
        if gap > SYMMETRY_TOL * max(scale, 1.0):
            raise NotSymmetric(f"{op.name}: symmetry spot check failed (gap {gap:.3e})")


def spot_check_positive(op, trials=3, seed=1):
    """ Raises NotPositiveDefinite if v^T A v <= 0 for a random v. """
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        v = rng.standard_normal(op.dim)
        curvature = v @ op.apply(v)
        if curvature <= 0.0:
            raise NotPositiveDefinite(f"{op.name}: positivity spot check failed (v^T A v = {curvature:.3e})")


def declared_operator(op, symmetric, spd):
    A = aslinearoperator(op, symmetric=symmetric, spd=spd)
    if spd and not A.spd:
        raise InvalidInput(f"{A.name} must be declared SPD")
    if symmetric and not A.symmetric:
        raise InvalidInput(f"{A.name} must be declared symmetric")
    return A


class VectorWindow:
    """ Rolling window of the p most recent basis vectors and their operator products. """

    def __init__(self, capacity):
        self.capacity = int(capacity)
        self._vectors = []
        self._products = []

    def __len__(self):
        return len(self._vectors)

    @property
    def is_full(self):
        return len(self._vectors) >= self.capacity

    def push(self, vector, product):
        self._vectors.append(np.array(vector, dtype=np.float64))
        self._products.append(np.array(product, dtype=np.float64))
        if len(self._vectors) > self.capacity:
            self._vectors.pop(0)
            self._products.pop(0)

    def vectors(self):
        return np.column_stack(self._vectors) if self._vectors else None

    def products(self):
        return np.column_stack(self._products) if self._products else None

    def clear(self):
        self._vectors.clear()
        self._products.clear()


@dataclass
class LanczosState:
    """ Two most recent Lanczos vectors plus the tridiagonal coefficients generated so far. """
    v_prev: np.ndarray
    v: np.ndarray
    beta: float = 0.0
    alphas: list = field(default_factory=list)
    betas: list = field(default_factory=list)

    def ritz_values(self):
        """ Eigenvalues of the tridiagonal T_j built so far, ascending. """
        if not self.alphas:
            return np.zeros(0)
        values, _ = sym_tridiag_eig(self.alphas, self.betas[: len(self.alphas) - 1])
        return values


class ShortRecurrenceState:
    """
    Givens-QR recurrence behind MINRES.

    Keeps the last two rotations, the last two direction vectors
    w = V R^{-1} and the matching k-dimensional columns of B R^{-1}, so that
    both the Krylov update and the deferred recycle correction are formed
    without storing the basis.
    """

    def __init__(self, n, k, beta):
        self.c_prev2, self.s_prev2 = 1.0, 0.0
        self.c_prev, self.s_prev = 1.0, 0.0
        self.phibar = float(beta)
        self.w_prev = np.zeros(n)
        self.w_prev2 = np.zeros(n)
        self.d_prev = np.zeros(k)
        self.d_prev2 = np.zeros(k)

    def update(self, v, coeffs, alpha, beta, beta_next):
        """
        Absorbs one tridiagonal column (beta, alpha, beta_next).
        :return: (step along W, step along B R^{-1}, new residual norm) or None if R is singular.
        """
        epsilon = self.s_prev2 * beta
        delta_bar = self.c_prev2 * beta
        delta = self.c_prev * delta_bar + self.s_prev * alpha
        gamma_bar = -self.s_prev * delta_bar + self.c_prev * alpha
        gamma = float(np.hypot(gamma_bar, beta_next))
        if gamma == 0.0:
            return None
        c, s = gamma_bar / gamma, beta_next / gamma
        phi = c * self.phibar
        self.phibar = -s * self.phibar

        w = (v - delta * self.w_prev - epsilon * self.w_prev2) / gamma
        d = (coeffs - delta * self.d_prev - epsilon * self.d_prev2) / gamma
        self.w_prev2, self.w_prev = self.w_prev, w
        self.d_prev2, self.d_prev = self.d_prev, d
        self.c_prev2, self.s_prev2 = self.c_prev, self.s_prev
        self.c_prev, self.s_prev = c, s
        return phi * w, phi * d, abs(self.phibar)


@dataclass
class RecurrenceResult:
    """ Correction accumulated by a short-recurrence run started from a (projected) residual. """
    dx: np.ndarray
    z_acc: np.ndarray
    estimates: list
    steps: int
    termination: Termination
    lanczos: Optional[LanczosState] = None


def minres_recurrence(op, r_hat, maxit, target, norm_a, project=None, k=0, window=None,
                      on_window_full=None, on_step=None):
    """
    Lanczos three-term recurrence with the MINRES update.

    :param r_hat: Starting residual (already projected when recycling).
    :param project: Optional hook returning (projected product, k coefficients).
    :param window: Optional VectorWindow receiving (v_j, A v_j).
    :param on_window_full: Called with the window whenever it fills.
    :return: RecurrenceResult; dx = W t and z_acc = B R^{-1} t.
    """
    n = op.dim
    beta1 = float(np.linalg.norm(r_hat))
    dx = np.zeros(n)
    z_acc = np.zeros(k)
    estimates = []
    if beta1 == 0.0:
        return RecurrenceResult(dx, z_acc, estimates, 0, Termination.TOLERANCE)
    lanczos = LanczosState(v_prev=np.zeros(n), v=r_hat / beta1)
    qr = ShortRecurrenceState(n, k, beta1)
    termination = Termination.MAXITER
    steps = 0
    while steps < maxit:
        v = lanczos.v
        Av = op.apply(v)
        w, coeffs = (Av, _EMPTY) if project is None else project(Av)
        if window is not None:
            window.push(v, Av)
            if window.is_full and on_window_full is not None:
                on_window_full(window)
        w = w - lanczos.beta * lanczos.v_prev
        alpha = float(v @ w)
        w = w - alpha * v
        beta_next = float(np.linalg.norm(w))
        _check_finite([alpha, beta_next], "Lanczos step")
        lanczos.alphas.append(alpha)
        lanczos.betas.append(beta_next)
        steps += 1

        step = qr.update(v, coeffs, alpha, lanczos.beta, beta_next)
        if step is None:
            termination = Termination.BREAKDOWN
            estimates.append(estimates[-1] if estimates else beta1)
            break
        dx_step, z_step, estimate = step
        dx += dx_step
        z_acc += z_step
        estimates.append(estimate)
        if on_step is not None:
            on_step(dx, z_acc, estimate)
        if estimate <= target:
            termination = Termination.TOLERANCE
            break
        if beta_next <= BREAKDOWN_TOL * norm_a:
            termination = Termination.BREAKDOWN
            break
        lanczos.v_prev, lanczos.v = v, w / beta_next
        lanczos.beta = beta_next
    return RecurrenceResult(dx, z_acc, estimates, steps, termination, lanczos)


def cg_recurrence(op, r_hat, maxit, target, project=None, k=0, window=None, on_window_full=None,
                  on_step=None):
    """
    Conjugate-gradient recurrence started from t = 0 with residual r_hat.
    :return: RecurrenceResult; dx = t and z_acc accumulates alpha * coeffs(A p).
    """
    n = op.dim
    t = np.zeros(n)
    z_acc = np.zeros(k)
    r = np.array(r_hat, dtype=np.float64)
    rr = float(r @ r)
    estimates = []
    if rr == 0.0:
        return RecurrenceResult(t, z_acc, estimates, 0, Termination.TOLERANCE)
    p = r.copy()
    termination = Termination.MAXITER
    steps = 0
    while steps < maxit:
        Ap = op.apply(p)
        q, coeffs = (Ap, _EMPTY) if project is None else project(Ap)
        if window is not None:
            window.push(p, Ap)
            if window.is_full and on_window_full is not None:
                on_window_full(window)
        curvature = float(p @ q)
        _check_finite([curvature], "CG step")
        if curvature <= 0.0:
            raise NotPositiveDefinite(f"{op.name}: non-positive curvature p^T A p = {curvature:.3e}")
        alpha = rr / curvature
        t += alpha * p
        z_acc += alpha * coeffs
        r -= alpha * q
        rr_next = float(r @ r)
        steps += 1
        estimate = float(np.sqrt(rr_next))
        estimates.append(estimate)
        if on_step is not None:
            on_step(t, z_acc, estimate)
        if estimate <= target:
            termination = Termination.TOLERANCE
            break
        p = r + (rr_next / rr) * p
        rr = rr_next
    return RecurrenceResult(t, z_acc, estimates, steps, termination)


def finish_short_recurrence(A, b, x, norm_b, target, resnorms, matvecs, result, name, debug):
    r = b - A.apply(x)
    matvecs += 1
    resnorm = float(np.linalg.norm(r))
    _check_finite([resnorm], "true residual")
    if result.steps:
        if debug and abs(resnorm - resnorms[-1]) > RESIDUAL_GAP_TOL * max(norm_b, 1.0):
            raise InvariantViolation(f"{name}: true residual {resnorm:.3e} differs from estimate {resnorms[-1]:.3e}")
        resnorms[-1] = resnorm
    else:
        # recycle projection alone met the target
        resnorms.append(resnorm)
    converged = resnorm <= target
    if result.termination is Termination.TOLERANCE and not converged:
        logger.warning("⚠️ %s: recurrence met tolerance but true residual is %.3e", name, resnorm)
    return resnorms, matvecs, converged


def minres(op, b, x0=None, tol=DEFAULT_TOL, maxit=DEFAULT_MAXIT, debug_checks=None):
    """
    MINRES for symmetric (possibly indefinite) operators.
    :param op: Operator; wrapping it here declares it symmetric.
    :return: SolveReport.
    """
    A = declared_operator(op, symmetric=True, spd=False)
    A, b, x = prepare_problem(A, b, x0)
    debug = debug_checks_enabled(debug_checks)
    norm_a = operator_norm(A)
    spot_check_symmetric(A, norm_a=norm_a)
    norm_b = float(np.linalg.norm(b))
    target = tol * norm_b

    r0 = b - A.apply(x)
    resnorms = [float(np.linalg.norm(r0))]
    _check_finite(resnorms, "initial residual")
    if resnorms[0] <= target:
        return SolveReport(x, resnorms, 1, 0, True, Termination.TOLERANCE)
    result = minres_recurrence(A, r0, maxit, target, norm_a)
    x = x + result.dx
    resnorms.extend(result.estimates)
    resnorms, matvecs, converged = finish_short_recurrence(A, b, x, norm_b, target, resnorms, 1 + result.steps,
                                                 result, "minres", debug)
    logger.info("minres: %d iterations, residual %.3e (%s)", result.steps, resnorms[-1], result.termination.value)
    return SolveReport(x, resnorms, matvecs, result.steps, converged, result.termination,
                       info={"alphas": list(result.lanczos.alphas), "betas": list(result.lanczos.betas),
                             "ritz_values": result.lanczos.ritz_values()})


def cg(op, b, x0=None, tol=DEFAULT_TOL, maxit=DEFAULT_MAXIT, debug_checks=None):
    """
    Conjugate gradients for SPD operators.
    :raises NotPositiveDefinite: on a failed spot check or a non-positive curvature.
    """
    A = declared_operator(op, symmetric=True, spd=True)
    A, b, x = prepare_problem(A, b, x0)
    debug = debug_checks_enabled(debug_checks)
    spot_check_positive(A)
    norm_b = float(np.linalg.norm(b))
    target = tol * norm_b

    r0 = b - A.apply(x)
    resnorms = [float(np.linalg.norm(r0))]
    _check_finite(resnorms, "initial residual")
    if resnorms[0] <= target:
        return SolveReport(x, resnorms, 1, 0, True, Termination.TOLERANCE)
    result = cg_recurrence(A, r0, maxit, target)
    x = x + result.dx
    resnorms.extend(result.estimates)
    resnorms, matvecs, converged = finish_short_recurrence(A, b, x, norm_b, target, resnorms, 1 + result.steps,
                                                 result, "cg", debug)
    logger.info("cg: %d iterations, residual %.3e (%s)", result.steps, resnorms[-1], result.termination.value)
    return SolveReport(x, resnorms, matvecs, result.steps, converged, result.termination)
