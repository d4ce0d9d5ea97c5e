import logging
import math
import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from core.sparse_io import CsrMatrix, write_matrix_market, write_vector
from utilities.error_handler import InvalidInput
from utilities.file_manager import FileManager

logger = logging.getLogger(__name__)

GENERATOR_KINDS = ("laplacian2d", "diag_perturb")


@dataclass(frozen=True)
class GeneratorSpec:
    """ Parameters of a generated sequence of nearby systems. """
    kind: str
    n: int
    count: int = 1
    perturbation: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise InvalidInput(f"unknown generator kind '{self.kind}', expected one of {GENERATOR_KINDS}")
        if self.n < 4:
            raise InvalidInput(f"generator needs n >= 4, got {self.n}")
        if self.count < 1:
            raise InvalidInput(f"generator needs count >= 1, got {self.count}")
        if self.perturbation < 0 or not math.isfinite(self.perturbation):
            raise InvalidInput(f"perturbation must be a finite non-negative number, got {self.perturbation}")
        if self.kind == "laplacian2d" and math.isqrt(self.n) ** 2 != self.n:
            raise InvalidInput(f"laplacian2d needs a perfect-square n, got {self.n}")

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(kind=str(data["kind"]), n=int(data["n"]), count=int(data.get("count", 1)),
                       perturbation=float(data.get("perturbation", 0.0)), seed=int(data.get("seed", 0)))
        except KeyError as e:
            raise InvalidInput(f"generator block is missing {e}") from e
        except (TypeError, ValueError) as e:
            raise InvalidInput(f"invalid generator block {data}: {e}") from e

    def to_dict(self):
        return {"kind": self.kind, "n": self.n, "count": self.count, "perturbation": self.perturbation,
                "seed": self.seed}


@dataclass(frozen=True, eq=False)
class GeneratedSystem:
    matrix: CsrMatrix
    rhs: np.ndarray
    symmetric: bool
    spd: bool


def _weighted_laplacian(wh, wv):
    """
    Five-point operator with edge coefficients on a g x g grid and Dirichlet ghosts.
    :param wh: g x (g+1) horizontal edge weights; columns 0 and g touch the boundary.
    :param wv: (g+1) x g vertical edge weights; rows 0 and g touch the boundary.
    """
    g = wh.shape[0]
    node = np.arange(g * g).reshape(g, g)
    diag = (wh[:, :-1] + wh[:, 1:] + wv[:-1, :] + wv[1:, :]).ravel()
    h_rows, h_cols, h_vals = node[:, :-1].ravel(), node[:, 1:].ravel(), -wh[:, 1:-1].ravel()
    v_rows, v_cols, v_vals = node[:-1, :].ravel(), node[1:, :].ravel(), -wv[1:-1, :].ravel()
    rows = np.concatenate([np.arange(g * g), h_rows, h_cols, v_rows, v_cols])
    cols = np.concatenate([np.arange(g * g), h_cols, h_rows, v_cols, v_rows])
    vals = np.concatenate([diag, h_vals, h_vals, v_vals, v_vals])
    return CsrMatrix.from_scipy(sp.coo_matrix((vals, (rows, cols)), shape=(g * g, g * g)).tocsr())


def laplacian2d_sequence(spec):
    """
    Perturbed 2D Laplacians. Edge coefficients follow a multiplicative random walk,
    a <- a * (1 + delta * u) with u uniform in [-1, 1], so every entry of
    A^(i+1) - A^(i) is bounded by delta times the matching entry of A^(i).
    The walk starts with a step away from the unit coefficients as well: the plain
    Laplacian with b = ones has a symmetric, low-dimensional Krylov space.
    """
    g = math.isqrt(spec.n)
    rng = np.random.default_rng(spec.seed)
    wh = np.ones((g, g + 1))
    wv = np.ones((g + 1, g))
    systems = []
    for _ in range(spec.count):
        if spec.perturbation > 0:
            wh = wh * (1.0 + spec.perturbation * rng.uniform(-1.0, 1.0, wh.shape))
            wv = wv * (1.0 + spec.perturbation * rng.uniform(-1.0, 1.0, wv.shape))
        systems.append(GeneratedSystem(_weighted_laplacian(wh, wv), np.ones(spec.n), True, True))
    return systems


def diag_perturb_sequence(spec):
    """
    Symmetric strictly diagonally dominant random matrices; each new system edits the
    off-diagonal entries of one localized band of rows and rebalances the diagonal.
    """
    n = spec.n
    rng = np.random.default_rng(spec.seed)
    density = min(1.0, 4.0 / n)
    base = sp.random(n, n, density=density, random_state=rng, data_rvs=lambda size: rng.uniform(-1.0, 1.0, size))
    off = sp.triu(base, k=1)
    off = (off + off.T).tocsr()
    band = max(1, n // 10)
    systems = []
    for i in range(spec.count):
        if i > 0 and spec.perturbation > 0:
            start = int(rng.integers(0, n - band + 1))
            coo = off.tocoo()
            local = (coo.row >= start) & (coo.row < start + band) & (coo.col >= start) & (coo.col < start + band)
            factor = np.ones(coo.nnz)
            factor[local] += spec.perturbation * rng.uniform(-1.0, 1.0, int(local.sum()))
            edited = sp.coo_matrix((coo.data * factor, (coo.row, coo.col)), shape=(n, n))
            off = (0.5 * (edited + edited.T)).tocsr()
        diag = np.asarray(abs(off).sum(axis=1)).ravel() + 1.0
        systems.append(GeneratedSystem(CsrMatrix.from_scipy((off + sp.diags(diag)).tocsr()), np.ones(n), True, True))
    return systems


def generate_sequence(spec):
    """
    Materializes the systems described by a GeneratorSpec (deterministic under its seed).
    :param spec: GeneratorSpec or dict with kind, n, count, perturbation, seed.
    :return: List of GeneratedSystem.
    """
    if isinstance(spec, dict):
        spec = GeneratorSpec.from_dict(spec)
    logger.info("🧮 Generating %d %s systems (n=%d, perturbation=%g, seed=%d)", spec.count, spec.kind, spec.n,
                spec.perturbation, spec.seed)
    if spec.kind == "laplacian2d":
        return laplacian2d_sequence(spec)
    return diag_perturb_sequence(spec)


def write_sequence(spec, out_dir, solver="rcg", selector=None):
    """
    Writes system_XX.mtx / rhs_XX.txt and a manifest.json referencing them.
    :return: Path of the manifest.
    """
    if isinstance(spec, dict):
        spec = GeneratorSpec.from_dict(spec)
    FileManager.ensure_directory_exists(out_dir)
    systems = []
    for i, system in enumerate(generate_sequence(spec)):
        matrix_name, rhs_name = f"system_{i:02d}.mtx", f"rhs_{i:02d}.txt"
        write_matrix_market(system.matrix, os.path.join(out_dir, matrix_name), symmetric=system.symmetric,
                            comment=f"{spec.kind} system {i} of {spec.count}")
        write_vector(system.rhs, os.path.join(out_dir, rhs_name))
        systems.append({"matrix": matrix_name, "rhs": rhs_name, "symmetric": system.symmetric, "spd": system.spd})
    manifest = {
        "systems": systems,
        "solver": {"name": solver},
        "selector": selector if selector is not None else {"kind": "Ritz", "k": 10},
        "warm_start": True,
        "recycle_across_systems": True,
        "generated_by": spec.to_dict(),
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    FileManager.save_json(manifest_path, manifest)
    return manifest_path
