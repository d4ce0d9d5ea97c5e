import logging
import time

import numpy as np
from tqdm import tqdm

from core import krylov_base, recycle_solvers
from core.manifest import load_system
from core.recycle_core import RecycleVariant, prepare_recycle
from core.recycle_solvers import ShiftedFamily, solve_shifted_family
from core.report_generator import ConvergenceRecord
from core.sparse_io import aslinearoperator
from strategies.pod import pod_select
from strategies.previous_solutions import previous_solutions_select
from strategies.selector_spec import SelectorKind
from utilities.config_loader import DEFAULT_CONFIG
from utilities.error_handler import (
    ConvergenceFailure,
    EmptyRecycleSpace,
    ErrorHandler,
    IllConditionedPencil,
    IoError,
    NotPositiveDefinite,
    RecyklosError,
)

logger = logging.getLogger(__name__)

# numerical errors from numpy / scipy that a solve or a selection can raise
NUMERICAL_ERRORS = (np.linalg.LinAlgError, ValueError, FloatingPointError, ZeroDivisionError)

# variant (and A-orthonormalization) each recycling solver expects its incoming space in
RECYCLE_VARIANTS = {
    "rgmres": (RecycleVariant.ORTHOGONAL, False),
    "rgmres_oblique": (RecycleVariant.OBLIQUE_MR, False),
    "rfom": (RecycleVariant.OBLIQUE_FOM, False),
    "rminres": (RecycleVariant.ORTHOGONAL, False),
    "rcg": (RecycleVariant.OBLIQUE_FOM, True),
}


class SequenceRunner:
    """ Solves the systems of a manifest in order, carrying warm starts and the recycle space. """

    def __init__(self, manifest, config=None, timing=True, progress=True, error_handler=None):
        """
        :param manifest: SequenceManifest.
        :param config: Loaded configuration (recycling and dense sections are read).
        :param timing: Record wall-clock milliseconds; False writes 0 for reproducible reports.
        :param progress: Show a tqdm progress bar over the systems.
        :param error_handler: ErrorHandler receiving per-system failures.
        """
        self.manifest = manifest
        self.config = config or DEFAULT_CONFIG
        self.timing = timing
        self.progress = progress
        self.error_handler = error_handler or ErrorHandler(
            self.config.get("logging", {}).get("log_dir", DEFAULT_CONFIG["logging"]["log_dir"]))
        recycling = self.config.get("recycling", DEFAULT_CONFIG["recycling"])
        self.rank_tol = float(recycling.get("rank_tol", DEFAULT_CONFIG["recycling"]["rank_tol"]))
        self.max_dim = int(recycling.get("max_dim", DEFAULT_CONFIG["recycling"]["max_dim"]))
        self.cond_max = float(self.config.get("dense", DEFAULT_CONFIG["dense"]).get(
            "pencil_cond_max", DEFAULT_CONFIG["dense"]["pencil_cond_max"]))

        self.records = []
        self.solutions = []
        self._x_prev = None
        self._carried = None  # raw recycle basis for the next system

    @property
    def carries_recycle_space(self):
        m = self.manifest
        return m.recycle_across_systems and m.solver.recycles and m.selector.active

    def run(self):
        """
        Runs the whole sequence.
        :return: List of ConvergenceRecord (one per system, or one per shift for shifted families).
        :raises IoError: when a system's input cannot be read; the message names the system index.
        """
        count = len(self.manifest.systems)
        logger.info("🚀 Solving %d systems with %s", count, self.manifest.solver.name)
        for index in tqdm(range(count), desc="systems", unit="system", disable=not self.progress):
            A, b = load_system(self.manifest, index)
            self._solve_system(index, A, b)
        converged = sum(rec.converged for rec in self.records)
        total = sum(rec.matvecs for rec in self.records)
        logger.info("✅ Sequence finished: %d/%d solves converged, %d matvecs in total", converged,
                    len(self.records), total)
        return self.records

    def _solve_system(self, index, A, b):
        system = self.manifest.systems[index]
        op = aslinearoperator(A, symmetric=system.symmetric, spd=system.spd, name=f"A{index}")
        start = time.perf_counter()
        rs = None
        try:
            rs = self._prepare_incoming(index, op)
            x0 = self._warm_start(index, op)
            if system.shifts is not None:
                records, x = self._solve_family(index, op, b, rs, system.shifts)
            else:
                report, rs_next = self._dispatch(op, b, x0, rs)
                x = report.x
                matvecs_prepare = rs.prepare_matvecs if rs is not None else 0
                report.matvecs += matvecs_prepare
                records = [ConvergenceRecord.from_report(index, report, recycle_dim=rs.k if rs is not None else 0)]
                self._select_outgoing(rs_next)
        except IoError:
            raise
        except (RecyklosError, *NUMERICAL_ERRORS) as e:
            self.error_handler.handle_exception(as_recyklos_error(e), source=f"system {index}")
            records = [ConvergenceRecord.failed(index, recycle_dim=rs.k if rs is not None else 0)]
            x = None
        wall_ms = (time.perf_counter() - start) * 1000.0 if self.timing else 0.0
        for rec in records:
            rec.wall_ms = wall_ms
        self.records.extend(records)
        if x is not None:
            self._x_prev = x
            self.solutions.append(x)
            try:
                self._select_from_history()
            except IoError:
                raise
            except (RecyklosError, *NUMERICAL_ERRORS) as e:
                self.error_handler.handle_exception(as_recyklos_error(e), source=f"system {index} selection")
                logger.warning("⚠️ system %d: no recycle space selected for the next system", index)
                self._carried = None

    def _prepare_incoming(self, index, op):
        if not self.carries_recycle_space or self._carried is None or self._carried.shape[1] == 0:
            return None
        if self._carried.shape[0] != op.dim:
            logger.warning("⚠️ system %d: dimension changed, dropping the recycle space", index)
            return None
        variant, a_orth = RECYCLE_VARIANTS[self.manifest.solver.name]
        try:
            rs = prepare_recycle(op, self._carried, variant, rank_tol=self.rank_tol, max_dim=self.max_dim,
                                 a_orthonormalize=a_orth, cond_max=self.cond_max)
        except (EmptyRecycleSpace, IllConditionedPencil, NotPositiveDefinite) as e:
            logger.warning("⚠️ system %d: recycle space rejected (%s); solving with k = 0", index, e)
            return None
        logger.debug("system %d: recycle space k=%d prepared (%d matvecs)", index, rs.k, rs.prepare_matvecs)
        return rs

    def _warm_start(self, index, op):
        if not self.manifest.warm_start or self._x_prev is None:
            return None
        if self._x_prev.size != op.dim:
            logger.warning("⚠️ system %d: dimension changed, warm start skipped", index)
            return None
        return self._x_prev

    def _dispatch(self, op, b, x0, rs):
        solver = self.manifest.solver
        selector = self.manifest.selector
        name = solver.name
        if name in ("gmres", "fom"):
            fn = getattr(krylov_base, name)
            return fn(op, b, x0, m=solver.m, tol=solver.tol, maxit=solver.maxit), None
        if name in ("minres", "cg"):
            fn = getattr(krylov_base, name)
            return fn(op, b, x0, tol=solver.tol, maxit=solver.maxit), None
        if name in ("rgmres", "rgmres_oblique"):
            return recycle_solvers.rgmres_gcrodr(op, b, x0, rs, m=solver.m, tol=solver.tol, maxit=solver.maxit,
                                                 selector=selector, oblique=name == "rgmres_oblique",
                                                 rank_tol=self.rank_tol)
        if name == "rfom":
            report = recycle_solvers.rfom(op, b, x0, rs, m=solver.m, tol=solver.tol, maxit=solver.maxit,
                                          rank_tol=self.rank_tol)
            return report, rs
        fn = recycle_solvers.rminres if name == "rminres" else recycle_solvers.rcg
        return fn(op, b, x0, rs, tol=solver.tol, maxit=solver.maxit, selector=selector, rank_tol=self.rank_tol)

    def _solve_family(self, index, op, b, rs, shifts):
        solver = self.manifest.solver
        if self.manifest.warm_start and self._x_prev is not None:
            logger.debug("system %d: shifted families always start from x0 = 0", index)
        family = ShiftedFamily(op, b, list(shifts))
        reports = solve_shifted_family(family, rs, m=solver.m, tol=solver.tol, form=solver.form,
                                       n_jobs=solver.shift_jobs, cond_max=self.cond_max)
        k = rs.k if rs is not None else 0
        records = []
        for gamma, report in zip(family.shifts, reports):
            if gamma == 0.0 and rs is not None:
                report.matvecs += rs.prepare_matvecs
            records.append(ConvergenceRecord.from_report(index, report, shift=gamma, recycle_dim=k))
        self._select_outgoing(rs)
        x = next(rep.x for gamma, rep in zip(family.shifts, reports) if gamma == 0.0)
        return records, x

    def _select_outgoing(self, rs_next):
        """ In-solve selectors hand over the space the solver ended with. """
        if not self.carries_recycle_space:
            return
        if self.manifest.selector.kind in (SelectorKind.HARMONIC_RITZ, SelectorKind.RITZ) and rs_next is not None:
            self._carried = rs_next.U if rs_next.k else None

    def _select_from_history(self):
        if not self.carries_recycle_space:
            return
        selector = self.manifest.selector
        if selector.kind is SelectorKind.POD:
            snapshots = np.column_stack(self.solutions[-max(selector.p, selector.k):])
            self._carried = pod_select(snapshots, selector.k, cap=selector.svd_cap)
        elif selector.kind is SelectorKind.PREVIOUS_SOLUTIONS:
            self._carried = previous_solutions_select(self.solutions, selector.k, rank_tol=self.rank_tol)


def as_recyklos_error(exc):
    """ Library errors pass through; numpy / scipy errors become a ConvergenceFailure chained to the original. """
    if isinstance(exc, RecyklosError):
        return exc
    failure = ConvergenceFailure(f"{type(exc).__name__}: {exc}")
    failure.__cause__ = exc
    return failure


def run_sequence(manifest, config=None, timing=True, progress=True, error_handler=None):
    """ Convenience wrapper around SequenceRunner.run(). """
    return SequenceRunner(manifest, config=config, timing=timing, progress=progress,
                          error_handler=error_handler).run()
