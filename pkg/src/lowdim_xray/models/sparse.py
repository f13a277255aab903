"""Material-basis sparse model: FISTA lasso over all elements, then a top-k least-squares refit."""

import dataclasses
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..errors import MissingTableError, NumericalError, ParseError, ShapeError, ValidationError
from ..physics.grid import EnergyGrid
from ..physics.tables import MAX_Z, ElementLibrary
from ..synth.dataset import StandardizationStats
from ..utils import FORMAT_VERSION
from .base import SpectralModel

logger = logging.getLogger(__name__)

POWER_ITERATION_TOL = 1e-8
POWER_ITERATION_MAX = 10_000


def soft_threshold(v: np.ndarray, threshold: float) -> np.ndarray:
    """Elementwise ``sign(v) * max(|v| - threshold, 0)``."""
    return np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)


def largest_eigenvalue(gram: np.ndarray, tol: float = POWER_ITERATION_TOL, max_iter: int = POWER_ITERATION_MAX) -> float:
    """Power iteration on a symmetric positive semi-definite matrix."""
    v = np.ones(gram.shape[0]) / np.sqrt(gram.shape[0])
    estimate = 0.0
    for _ in range(max_iter):
        w = gram @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(norm - estimate) <= tol * norm:
            return norm
        estimate = norm
    logger.warning("Power iteration stopped after %d steps without reaching tolerance %g", max_iter, tol)
    return estimate


@dataclass(frozen=True)
class SparseBasis:
    """Columns are standardized element LACs, ordered by ascending Z."""

    matrix: np.ndarray
    lam: float
    k_select: int = 5
    max_iters: int = 2000
    tol: float = 1e-8
    atoms: tuple[int, ...] = tuple(range(1, MAX_Z + 1))
    lipschitz: float = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        matrix = np.ascontiguousarray(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[1] != len(self.atoms):
            raise ShapeError(f"basis matrix must have one column per atom ({len(self.atoms)}), got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise ValidationError("basis columns must be finite")
        if list(self.atoms) != sorted(set(self.atoms)):
            raise ValidationError("basis atoms must be distinct and ascending")
        if not self.lam >= 0.0:
            raise ValidationError(f"lambda must be non-negative, got {self.lam}")
        if not 1 <= self.k_select <= matrix.shape[1]:
            raise ValidationError(f"k_select must be in 1..{matrix.shape[1]}, got {self.k_select}")
        if self.max_iters < 1 or not self.tol > 0.0:
            raise ValidationError("max_iters must be >= 1 and tol positive")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "lipschitz", largest_eigenvalue(matrix.T @ matrix))

    @property
    def n_bins(self) -> int:
        return int(self.matrix.shape[0])

    def objective(self, y: np.ndarray, x: np.ndarray) -> np.ndarray:
        """``0.5 * ||y - A x||^2 + lam * ||x||_1`` for each row of ``x``."""
        residual = y - x @ self.matrix.T
        return 0.5 * np.sum(residual**2, axis=-1) + self.lam * np.sum(np.abs(x), axis=-1)

    def with_lambda(self, lam: float) -> "SparseBasis":
        return dataclasses.replace(self, lam=lam)


@dataclass(frozen=True)
class FistaResult:
    """Full coefficient vectors (one row per spectrum) and solver bookkeeping."""

    x: np.ndarray
    n_iter: np.ndarray
    objective: np.ndarray
    objective_history: tuple[tuple[float, ...], ...] = ()


@dataclass(frozen=True)
class SparseCode:
    """Selected atomic numbers, in selection order, and their refitted coefficients."""

    indices: tuple[int, ...]
    coefficients: np.ndarray
    objective_history: tuple[float, ...] = ()
    rank_deficient: bool = False

    def reconstruct(self, basis: SparseBasis) -> np.ndarray:
        columns = [basis.atoms.index(z) for z in self.indices]
        return basis.matrix[:, columns] @ self.coefficients

    def format(self) -> str:
        return ";".join(f"{z}:{c!r}" for z, c in zip(self.indices, self.coefficients.tolist(), strict=True))


def _check_spectra(basis: SparseBasis, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != basis.n_bins:
        raise ShapeError(f"basis has {basis.n_bins} bins, spectrum has {y.shape[-1]}")
    if not np.all(np.isfinite(y)):
        raise NumericalError("spectrum contains non-finite values")
    return y


def fista_solve_batch(basis: SparseBasis, spectra: np.ndarray, keep_history: bool = False) -> FistaResult:
    """Solve the lasso for every row of ``spectra``.

    Rows stop independently once their relative objective change drops below
    ``basis.tol``; stopped rows are no longer updated.
    """
    y = np.atleast_2d(_check_spectra(basis, spectra))
    n_rows, n_atoms = y.shape[0], basis.matrix.shape[1]
    a = basis.matrix
    gram = a.T @ a
    aty = y @ a
    lipschitz = basis.lipschitz
    if lipschitz == 0.0:
        zeros = np.zeros((n_rows, n_atoms))
        return FistaResult(zeros, np.zeros(n_rows, dtype=int), basis.objective(y, zeros))

    x = np.zeros((n_rows, n_atoms))
    z = x.copy()
    t = 1.0
    n_iter = np.zeros(n_rows, dtype=int)
    previous = np.full(n_rows, np.nan)
    active = np.arange(n_rows)
    history: list[list[float]] = [[] for _ in range(n_rows)] if keep_history else []
    threshold = basis.lam / lipschitz

    for it in range(1, basis.max_iters + 1):
        grad = z[active] @ gram - aty[active]
        x_new = soft_threshold(z[active] - grad / lipschitz, threshold)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z[active] = x_new + ((t - 1.0) / t_new) * (x_new - x[active])
        x[active] = x_new
        t = t_new

        current = basis.objective(y[active], x_new)
        if not np.all(np.isfinite(current)):
            raise NumericalError(f"FISTA objective became non-finite at iteration {it}")
        n_iter[active] = it
        if keep_history:
            for row, value in zip(active, current, strict=True):
                history[row].append(float(value))

        change = np.abs(previous[active] - current)
        done = change <= basis.tol * np.maximum(np.abs(previous[active]), np.finfo(float).tiny)
        previous[active] = current
        active = active[~done]
        if active.size == 0:
            break

    return FistaResult(
        x=x,
        n_iter=n_iter,
        objective=basis.objective(y, x),
        objective_history=tuple(tuple(h) for h in history),
    )


def fista_solve(basis: SparseBasis, y: np.ndarray) -> FistaResult:
    """Minimize ``0.5 * ||y - A x||^2 + lam * ||x||_1`` with step ``1/L`` and Nesterov momentum."""
    y = _check_spectra(basis, y)
    if y.ndim != 1:
        raise ShapeError(f"expected a single spectrum, got shape {y.shape}")
    return fista_solve_batch(basis, y[None, :], keep_history=True)


def top_k_refit(basis: SparseBasis, y: np.ndarray, x: np.ndarray | FistaResult) -> SparseCode:
    """Keep the ``k_select`` largest |x| (ties go to the lower Z) and refit them by least squares."""
    history: tuple[float, ...] = ()
    if isinstance(x, FistaResult):
        history = x.objective_history[0] if x.objective_history else ()
        x = x.x[0]
    y = _check_spectra(basis, y)
    x = np.asarray(x, dtype=float)
    if x.shape != (len(basis.atoms),):
        raise ShapeError(f"expected {len(basis.atoms)} coefficients, got shape {x.shape}")

    order = np.lexsort((np.array(basis.atoms), -np.abs(x)))
    selected = order[: basis.k_select]
    restricted = basis.matrix[:, selected]
    coefficients, _, rank, _ = np.linalg.lstsq(restricted, y, rcond=None)
    return SparseCode(
        indices=tuple(basis.atoms[i] for i in selected),
        coefficients=coefficients,
        objective_history=history,
        rank_deficient=bool(rank < selected.size),
    )


def sparse_codes(basis: SparseBasis, spectra: np.ndarray) -> list[SparseCode]:
    spectra = np.atleast_2d(_check_spectra(basis, spectra))
    result = fista_solve_batch(basis, spectra)
    return [top_k_refit(basis, y, x) for y, x in zip(spectra, result.x, strict=True)]


def build_basis(
    library: ElementLibrary,
    grid: EnergyGrid,
    stats: StandardizationStats,
    lam: float,
    k_select: int = 5,
    max_iters: int = 2000,
    tol: float = 1e-8,
) -> SparseBasis:
    """Standardize the LAC of every element on ``grid`` with ``stats``; one column per element."""
    missing = sorted(set(range(1, MAX_Z + 1)) - set(library.atomic_numbers))
    if missing:
        raise MissingTableError(f"the material basis needs all {MAX_Z} elements; missing Z={missing}")
    columns = stats.standardize(library.lac_matrix(grid)).T
    return SparseBasis(matrix=columns, lam=lam, k_select=k_select, max_iters=max_iters, tol=tol)


@dataclass(frozen=True)
class SparseModel(SpectralModel):
    """A material basis with a chosen lambda; the stats it was standardized with travel along."""

    basis: SparseBasis
    stats: StandardizationStats | None = None
    lambda_grid: tuple[float, ...] = ()

    kind = "fista"

    @property
    def input_len(self) -> int:
        return self.basis.n_bins

    def encode(self, spectra: np.ndarray) -> list[SparseCode]:
        return sparse_codes(self.basis, self.check_width(spectra))

    def reconstruct(self, spectra: np.ndarray) -> np.ndarray:
        spectra = self.check_width(spectra)
        codes = self.encode(spectra)
        return np.array([code.reconstruct(self.basis) for code in codes]).reshape(spectra.shape)

    def to_dict(self) -> dict[str, Any]:
        basis = self.basis
        return {
            "kind": self.kind,
            "format_version": FORMAT_VERSION,
            "lambda": basis.lam,
            "k_select": basis.k_select,
            "max_iters": basis.max_iters,
            "tol": basis.tol,
            "lambda_grid": list(self.lambda_grid),
            "atoms": list(basis.atoms),
            "n_bins": basis.n_bins,
            "matrix": basis.matrix.ravel().tolist(),
            "stats": self.stats.to_dict() if self.stats is not None else None,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SparseModel":
        try:
            atoms = tuple(int(z) for z in data["atoms"])
            matrix = np.array(data["matrix"], dtype=float).reshape(int(data["n_bins"]), len(atoms))
            basis = SparseBasis(
                matrix=matrix,
                lam=float(data["lambda"]),
                k_select=int(data["k_select"]),
                max_iters=int(data["max_iters"]),
                tol=float(data["tol"]),
                atoms=atoms,
            )
        except (KeyError, TypeError) as e:
            raise ParseError(f"malformed sparse model: {e}") from e
        stats = StandardizationStats.from_dict(data["stats"]) if data.get("stats") else None
        return cls(basis=basis, stats=stats, lambda_grid=tuple(float(v) for v in data.get("lambda_grid", [])))


def tune_lambda(
    basis: SparseBasis,
    spectra: np.ndarray,
    candidates: Sequence[float],
    targets: np.ndarray | None = None,
) -> float:
    """Grid search for the lambda with the lowest mean NMSE of the refitted reconstructions.

    ``targets`` default to ``spectra``; the first candidate wins ties.
    """
    if len(candidates) == 0:
        raise ValidationError("tune_lambda needs at least one candidate")
    if len(candidates) == 1:
        return float(candidates[0])
    spectra = np.atleast_2d(_check_spectra(basis, spectra))
    targets = spectra if targets is None else np.atleast_2d(np.asarray(targets, dtype=float))
    norms = np.sum(targets**2, axis=1)
    if np.any(norms == 0.0):
        raise ValidationError("tuning targets must have non-zero norm")

    best_lam, best_score = float(candidates[0]), np.inf
    for lam in candidates:
        candidate = basis.with_lambda(float(lam))
        codes = sparse_codes(candidate, spectra)
        recon = np.array([code.reconstruct(candidate) for code in codes])
        score = float(np.mean(np.sum((targets - recon) ** 2, axis=1) / norms))
        logger.info("lambda=%g: mean NMSE %.6g", lam, score)
        if score < best_score:
            best_lam, best_score = float(lam), score
    return best_lam


def write_codes_csv(path: Path, codes: Sequence[SparseCode], row_ids: Sequence[int] | None = None) -> Path:
    """``row,components`` with components written as ``z1:c1;...;zk:ck``."""
    path = Path(path)
    row_ids = list(range(len(codes))) if row_ids is None else list(row_ids)
    with open(path, "w", encoding="utf-8") as f:
        f.write("row,components\n")
        for row, code in zip(row_ids, codes, strict=True):
            f.write(f"{int(row)},{code.format()}\n")
    return path
