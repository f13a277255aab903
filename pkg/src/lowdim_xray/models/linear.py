"""Rank-k SVD subspace models computed with one-sided Jacobi rotations."""

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..errors import NumericalError, ParseError, ShapeError, ValidationError
from ..utils import FORMAT_VERSION
from .base import SpectralModel

logger = logging.getLogger(__name__)

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


def canonicalize_signs(basis: np.ndarray) -> np.ndarray:
    """Flip columns so that each one's largest-magnitude entry is positive."""
    basis = np.array(basis, dtype=float)
    for j in range(basis.shape[1]):
        if basis[np.argmax(np.abs(basis[:, j])), j] < 0.0:
            basis[:, j] = -basis[:, j]
    return basis


def one_sided_jacobi(
    a: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS
) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonalize the columns of ``a`` by plane rotations.

    Returns ``(w, v)`` with ``a @ v = w``, ``v`` orthogonal and the columns of
    ``w`` mutually orthogonal; their norms are the singular values of ``a``.
    """
    w = np.array(a, dtype=float)
    n = w.shape[1]
    v = np.eye(n)
    # columns with norm below tol * ||a||_F are rounding noise and left alone
    floor = (tol * np.linalg.norm(w)) ** 2

    for sweep in range(1, max_sweeps + 1):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = w[:, p] @ w[:, p]
                beta = w[:, q] @ w[:, q]
                if alpha <= floor or beta <= floor:
                    continue
                gamma = w[:, p] @ w[:, q]
                ratio = abs(gamma) / np.sqrt(alpha * beta)
                if ratio <= tol:
                    continue
                off = max(off, ratio)
                zeta = (beta - alpha) / (2.0 * gamma)
                t = (1.0 if zeta >= 0.0 else -1.0) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                for m in (w, v):
                    col_p = m[:, p].copy()
                    m[:, p] = c * col_p - s * m[:, q]
                    m[:, q] = s * col_p + c * m[:, q]
        if off <= tol:
            logger.debug("Jacobi converged after %d sweep(s)", sweep)
            return w, v
    raise NumericalError(f"Jacobi SVD did not converge in {max_sweeps} sweeps")


def right_singular_vectors(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All singular values (descending) and an orthonormal set of right singular vectors of ``data``."""
    m, n = data.shape
    if m >= n:
        w, v = one_sided_jacobi(data)
        sigma = np.linalg.norm(w, axis=0)
        order = np.argsort(-sigma, kind="stable")
        return sigma[order], v[:, order]

    # wide data: rotate the columns of data.T; its orthogonalized columns are sigma * right vectors
    w, _ = one_sided_jacobi(data.T)
    sigma = np.linalg.norm(w, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma, w = sigma[order], w[:, order]
    nonzero = sigma > JACOBI_TOL * np.linalg.norm(data)
    known = w[:, nonzero] / sigma[nonzero]
    # complete to an orthonormal set; QR keeps the leading span and fills the rest
    q, _ = np.linalg.qr(np.column_stack([known, np.eye(n)]))
    vectors = np.column_stack([known, q[:, known.shape[1] :]])
    return sigma, vectors[:, :m]


@dataclass(frozen=True)
class SvdModel(SpectralModel):
    """Orthonormal basis of the top ``rank`` right singular vectors of a training matrix."""

    basis: np.ndarray
    singular_values: np.ndarray

    kind = "svd"

    def __post_init__(self) -> None:
        basis = np.ascontiguousarray(self.basis, dtype=float)
        sv = np.ascontiguousarray(self.singular_values, dtype=float)
        if basis.ndim != 2 or basis.shape[1] < 1:
            raise ShapeError(f"basis must be an n_bins x rank matrix, got shape {basis.shape}")
        if sv.ndim != 1 or sv.size < basis.shape[1]:
            raise ShapeError(f"need at least {basis.shape[1]} singular values, got {sv.size}")
        if np.any(sv < 0.0) or np.any(np.diff(sv) > 0.0):
            raise ValidationError("singular values must be non-negative and non-increasing")
        basis.setflags(write=False)
        sv.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "singular_values", sv)

    @property
    def rank(self) -> int:
        return int(self.basis.shape[1])

    @property
    def grid_bins(self) -> int:
        return int(self.basis.shape[0])

    @property
    def input_len(self) -> int:
        return self.grid_bins

    def encode(self, spectra: np.ndarray) -> np.ndarray:
        return self.check_width(spectra) @ self.basis

    def decode(self, coefficients: np.ndarray) -> np.ndarray:
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.shape[-1] != self.rank:
            raise ShapeError(f"expected {self.rank} coefficients, got {coefficients.shape[-1]}")
        return coefficients @ self.basis.T

    def project(self, spectra: np.ndarray) -> np.ndarray:
        return self.decode(self.encode(spectra))

    def reconstruct(self, spectra: np.ndarray) -> np.ndarray:
        return self.project(spectra)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "format_version": FORMAT_VERSION,
            "rank": self.rank,
            "grid_bins": self.grid_bins,
            "basis": self.basis.ravel().tolist(),
            "singular_values": self.singular_values.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SvdModel":
        try:
            rank, grid_bins = int(data["rank"]), int(data["grid_bins"])
            basis = np.array(data["basis"], dtype=float).reshape(grid_bins, rank)
            singular_values = np.array(data["singular_values"], dtype=float)
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"malformed svd model: {e}") from e
        return cls(basis=basis, singular_values=singular_values)


def fit_svd(data: np.ndarray, rank: int) -> SvdModel:
    """Fit a rank-``rank`` model to standardized spectra (rows); no extra centring is applied."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ShapeError(f"training data must be a matrix, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise NumericalError("training data contains non-finite values")
    if not 1 <= rank <= min(data.shape):
        raise ValidationError(f"rank must be in 1..{min(data.shape)} for a {data.shape[0]}x{data.shape[1]} matrix")

    sigma, vectors = right_singular_vectors(data)
    model = SvdModel(basis=canonicalize_signs(vectors[:, :rank]), singular_values=sigma)
    logger.info("Fitted rank-%d SVD on %d spectra (sigma_1=%.4g)", rank, data.shape[0], sigma[0])
    return model


def svd_encode(model: SvdModel, spectrum: np.ndarray) -> np.ndarray:
    return model.encode(spectrum)


def svd_decode(model: SvdModel, coefficients: np.ndarray) -> np.ndarray:
    return model.decode(coefficients)
