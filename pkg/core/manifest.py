"""
Sequence manifests: which systems to solve, with which solver, and how the
recycle space is carried between them.

A manifest lists its systems explicitly::

    {"systems": [{"matrix": "system_00.mtx", "rhs": "rhs_00.txt", "symmetric": true, "spd": true},
                 {"matrix": {"generator": {"kind": "laplacian2d", "n": 100, "count": 3}, "index": 2}}],
     "solver": {"name": "rcg", "tol": 1e-8},
     "selector": {"kind": "Ritz", "k": 10},
     "warm_start": true, "recycle_across_systems": true}

or through a single top-level ``generator`` block expanded into ``count`` systems.
Relative paths are resolved against the manifest's directory.
"""
import logging
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from core.problem_generator import GeneratorSpec, generate_sequence
from core.sparse_io import read_matrix_market, read_vector
from strategies.selector_spec import SelectorKind, SelectorSpec
from utilities.config_loader import DEFAULT_CONFIG
from utilities.error_handler import InvalidInput, IoError, RecyklosError
from utilities.file_manager import FileManager

logger = logging.getLogger(__name__)

SOLVER_NAMES = ("gmres", "fom", "minres", "cg", "rgmres", "rgmres_oblique", "rfom", "rminres", "rcg")
RECYCLING_SOLVERS = ("rgmres", "rgmres_oblique", "rfom", "rminres", "rcg")
SYMMETRIC_SOLVERS = ("minres", "rminres")
SPD_SOLVERS = ("cg", "rcg")
LS_FORMS = ("right", "left")


@dataclass(frozen=True)
class GeneratedRef:
    generator: GeneratorSpec
    index: int

    def __post_init__(self):
        if not 0 <= self.index < self.generator.count:
            raise InvalidInput(f"generated system index {self.index} outside 0..{self.generator.count - 1}")


@dataclass(frozen=True)
class SystemSpec:
    matrix: object  # path (str) or GeneratedRef
    rhs: Optional[str] = None  # None: generator rhs, or all ones for file matrices
    symmetric: bool = False
    spd: bool = False
    shifts: Optional[tuple] = None

    def __post_init__(self):
        if self.spd and not self.symmetric:
            raise InvalidInput("a system declared spd must also be declared symmetric")
        if self.shifts is not None:
            if not self.symmetric:
                raise InvalidInput("shifted families need a symmetric system")
            if len(set(self.shifts)) != len(self.shifts) or 0.0 not in self.shifts:
                raise InvalidInput(f"shifts must be distinct and contain 0, got {list(self.shifts)}")


@dataclass(frozen=True)
class SolverSpec:
    name: str = "gmres"
    m: int = DEFAULT_CONFIG["solver"]["restart"]
    tol: float = DEFAULT_CONFIG["solver"]["tol"]
    maxit: int = DEFAULT_CONFIG["solver"]["maxit"]
    form: str = "right"
    shift_jobs: int = DEFAULT_CONFIG["parallel"]["shift_jobs"]

    def __post_init__(self):
        if self.name not in SOLVER_NAMES:
            raise InvalidInput(f"unknown solver '{self.name}', expected one of {SOLVER_NAMES}")
        if self.m < 1 or self.maxit < 1:
            raise InvalidInput("solver m and maxit must be positive")
        if not self.tol > 0:
            raise InvalidInput(f"solver tol must be positive, got {self.tol}")
        if self.form not in LS_FORMS:
            raise InvalidInput(f"unknown least-squares form '{self.form}'")

    @property
    def recycles(self):
        return self.name in RECYCLING_SOLVERS


@dataclass(frozen=True)
class SequenceManifest:
    systems: tuple
    solver: SolverSpec = field(default_factory=SolverSpec)
    selector: SelectorSpec = field(default_factory=lambda: SelectorSpec(SelectorKind.NONE, 0))
    warm_start: bool = False
    recycle_across_systems: bool = False
    base_dir: str = "."

    def __post_init__(self):
        if not self.systems:
            raise InvalidInput("a manifest needs at least one system")
        for index, system in enumerate(self.systems):
            if self.solver.name in SPD_SOLVERS and not system.spd:
                raise InvalidInput(f"system {index}: solver {self.solver.name} needs a system declared spd")
            if self.solver.name in SYMMETRIC_SOLVERS and not system.symmetric:
                raise InvalidInput(f"system {index}: solver {self.solver.name} needs a system declared symmetric")
        if self.recycle_across_systems and not self.solver.recycles:
            logger.warning("⚠️ recycle_across_systems ignored: solver %s does not recycle", self.solver.name)


def _flag(data, key, default=False):
    value = data.get(key, default)
    if not isinstance(value, bool):
        raise InvalidInput(f"'{key}' must be true or false, got {value!r}")
    return value


def _parse_system(data, index):
    if not isinstance(data, dict) or "matrix" not in data:
        raise InvalidInput(f"system {index}: expected an object with a 'matrix' entry")
    matrix = data["matrix"]
    if isinstance(matrix, dict):
        if "generator" not in matrix:
            raise InvalidInput(f"system {index}: generated matrix needs a 'generator' block")
        matrix = GeneratedRef(GeneratorSpec.from_dict(matrix["generator"]), int(matrix.get("index", 0)))
    elif not isinstance(matrix, str):
        raise InvalidInput(f"system {index}: 'matrix' must be a path or a generator reference")
    rhs = data.get("rhs")
    if rhs is not None and not isinstance(rhs, str):
        raise InvalidInput(f"system {index}: 'rhs' must be a path")
    shifts = data.get("shifts")
    if shifts is not None:
        shifts = tuple(float(s) for s in shifts)
    symmetric = _flag(data, "symmetric", isinstance(matrix, GeneratedRef))
    spd = _flag(data, "spd", isinstance(matrix, GeneratedRef))
    return SystemSpec(matrix, rhs, symmetric, spd, shifts)


def parse_manifest(data, base_dir=".", config=None):
    """
    Validates a manifest dictionary.
    :param data: Decoded JSON.
    :param base_dir: Directory relative paths are resolved against.
    :param config: Loaded configuration; its solver/recycling sections supply defaults.
    :return: SequenceManifest.
    """
    if not isinstance(data, dict):
        raise InvalidInput("manifest root must be an object")
    config = config or DEFAULT_CONFIG
    solver_defaults = config.get("solver", DEFAULT_CONFIG["solver"])
    cap = config.get("recycling", DEFAULT_CONFIG["recycling"]).get("max_dim", DEFAULT_CONFIG["recycling"]["max_dim"])
    dense = {**DEFAULT_CONFIG["dense"], **config.get("dense", {})}

    if "generator" in data:
        spec = GeneratorSpec.from_dict(data["generator"])
        systems = [SystemSpec(GeneratedRef(spec, i), None, True, True) for i in range(spec.count)]
        systems += [_parse_system(s, len(systems) + i) for i, s in enumerate(data.get("systems", []))]
    else:
        raw = data.get("systems")
        if not isinstance(raw, list):
            raise InvalidInput("manifest needs a 'systems' list or a 'generator' block")
        systems = [_parse_system(s, i) for i, s in enumerate(raw)]

    solver_data = data.get("solver", {})
    if isinstance(solver_data, str):
        solver_data = {"name": solver_data}
    try:
        solver = SolverSpec(
            name=str(solver_data.get("name", "gmres")),
            m=int(solver_data.get("m", solver_defaults.get("restart", SolverSpec.m))),
            tol=float(solver_data.get("tol", solver_defaults.get("tol", SolverSpec.tol))),
            maxit=int(solver_data.get("maxit", solver_defaults.get("maxit", SolverSpec.maxit))),
            form=str(solver_data.get("form", "right")),
            shift_jobs=int(solver_data.get("shift_jobs", config.get("parallel", {}).get("shift_jobs", 1))),
        )
    except (TypeError, ValueError) as e:
        if isinstance(e, RecyklosError):
            raise
        raise InvalidInput(f"invalid solver block {solver_data}: {e}") from e

    selector_data = data.get("selector")
    selector = SelectorSpec.from_dict(selector_data, cap=cap, eig_cap=int(dense["eig_cap"]),
                                      svd_cap=int(dense["svd_cap"]), cond_max=float(dense["pencil_cond_max"]))
    return SequenceManifest(tuple(systems), solver, selector, _flag(data, "warm_start"),
                            _flag(data, "recycle_across_systems"), base_dir)


def load_manifest(path, config=None):
    """ Reads and validates a manifest file. """
    data = FileManager.load_json(path)
    manifest = parse_manifest(data, base_dir=os.path.dirname(os.path.abspath(path)), config=config)
    logger.info("📂 Manifest %s: %d systems, solver %s, selector %s", path, len(manifest.systems),
                manifest.solver.name, manifest.selector.kind.value)
    return manifest


@lru_cache(maxsize=8)
def _generated(spec):
    return tuple(generate_sequence(spec))


def load_system(manifest, index):
    """
    Materializes system `index` of a manifest.
    :return: (CsrMatrix, rhs vector).
    :raises IoError: naming the system index when its files cannot be read.
    """
    system = manifest.systems[index]
    try:
        if isinstance(system.matrix, GeneratedRef):
            generated = _generated(system.matrix.generator)[system.matrix.index]
            A, b = generated.matrix, generated.rhs.copy()
        else:
            A = read_matrix_market(_resolve(manifest, system.matrix))
            b = np.ones(A.nrows)
        if system.rhs is not None:
            b = read_vector(_resolve(manifest, system.rhs))
    except RecyklosError as e:
        raise IoError(f"system {index}: cannot load input ({e})") from e
    if A.nrows != A.ncols or b.size != A.nrows:
        raise IoError(f"system {index}: matrix {A.shape} and rhs of length {b.size} do not match")
    return A, b


def _resolve(manifest, path):
    return path if os.path.isabs(path) else os.path.join(manifest.base_dir, path)
