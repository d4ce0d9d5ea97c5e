import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import pandas as pd
from rich.table import Table

from utilities.error_handler import InvalidInput, IoError
from utilities.file_manager import FileManager

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["system", "shift", "iter", "resnorm", "matvecs"]
REPORT_FORMATS = ("csv", "json")


@dataclass
class ConvergenceRecord:
    """
    Convergence history of one solve (one shift of a family counts as one solve).
    ``resnorm[i]`` is the residual norm after iteration ``iter[i]``; iteration 0 is the residual the
    Krylov iteration starts from, after any correction in the recycle space.
    """
    system: int
    shift: Optional[float]
    iter: list
    resnorm: list
    matvecs: int
    recycle_dim: int = 0
    wall_ms: float = 0.0
    termination: str = "Tolerance"
    converged: bool = field(default=False, compare=False)

    def __post_init__(self):
        if len(self.iter) != len(self.resnorm):
            raise InvalidInput("iteration and residual histories differ in length")
        if any(b <= a for a, b in zip(self.iter, self.iter[1:])):
            raise InvalidInput(f"system {self.system}: iteration index must increase")
        if not all(math.isfinite(r) for r in self.resnorm):
            raise InvalidInput(f"system {self.system}: non-finite residual norm in history")

    @classmethod
    def from_report(cls, system, report, shift=None, recycle_dim=0, wall_ms=0.0):
        """ The iteration count comes from the report; extra leading history entries are dropped. """
        iterations = int(report.iterations)
        count = min(iterations + 1, len(report.resnorms))
        return cls(system=system, shift=shift, iter=list(range(iterations + 1 - count, iterations + 1)),
                   resnorm=[float(r) for r in report.resnorms[len(report.resnorms) - count:]],
                   matvecs=int(report.matvecs),
                   recycle_dim=int(recycle_dim), wall_ms=float(wall_ms), termination=report.termination.value,
                   converged=bool(report.converged))

    @classmethod
    def failed(cls, system, shift=None, recycle_dim=0, wall_ms=0.0):
        """ Placeholder for a system whose solve raised; history is empty. """
        return cls(system=system, shift=shift, iter=[], resnorm=[], matvecs=0, recycle_dim=recycle_dim,
                   wall_ms=wall_ms, termination="Error", converged=False)

    @property
    def iterations(self):
        return self.iter[-1] if self.iter else 0

    @property
    def final_resnorm(self):
        return self.resnorm[-1] if self.resnorm else math.nan

    def to_dict(self):
        data = asdict(self)
        data.pop("converged")
        return data


def records_to_frame(records):
    """ One row per (record, iteration); the matvecs column repeats the record total. """
    rows = [
        {"system": rec.system, "shift": rec.shift, "iter": i, "resnorm": r, "matvecs": rec.matvecs}
        for rec in records
        for i, r in zip(rec.iter, rec.resnorm)
    ]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def emit_report(records, fmt, path):
    """
    Writes records as CSV (columns system,shift,iter,resnorm,matvecs) or as a JSON list.
    :param fmt: "csv" or "json".
    :raises IoError: when the path cannot be written.
    """
    if fmt not in REPORT_FORMATS:
        raise InvalidInput(f"unknown report format '{fmt}', expected one of {REPORT_FORMATS}")
    if fmt == "csv":
        frame = records_to_frame(records)
        FileManager.save_csv(path, frame, float_format="%.17g")
        logger.info("✅ Saved CSV report: %s (%d rows)", path, len(frame))
    else:
        FileManager.save_json(path, [rec.to_dict() for rec in records])


def read_report(path):
    """ Reads a JSON report back into ConvergenceRecord objects. """
    data = FileManager.load_json(path)
    if not isinstance(data, list):
        raise IoError(f"{path}: a report must be a JSON list")
    try:
        return [ConvergenceRecord(**{**item, "converged": item.get("termination") == "Tolerance"}) for item in data]
    except TypeError as e:
        raise IoError(f"{path}: malformed report entry ({e})") from e


def summary_table(records, title="recyklos"):
    """ Rich table with one row per record. """
    table = Table(title=title)
    for column in ("system", "shift", "iterations", "matvecs", "k", "final resnorm", "termination", "wall ms"):
        table.add_column(column, justify="right" if column != "termination" else "left")
    for rec in records:
        style = None if rec.converged else "red"
        table.add_row(str(rec.system), "" if rec.shift is None else f"{rec.shift:g}", str(rec.iterations),
                      str(rec.matvecs), str(rec.recycle_dim), f"{rec.final_resnorm:.3e}", rec.termination,
                      f"{rec.wall_ms:.1f}", style=style)
    return table
