"""Spectrum models: the common base, the SVD subspace model and the sparse material-basis model.

The hybrid model and model IO depend on the neural engine and are imported
from their own modules.
"""

from .base import SpectralModel
from .linear import SvdModel, fit_svd, svd_decode, svd_encode
from .sparse import SparseBasis, SparseCode, SparseModel, build_basis, fista_solve, top_k_refit, tune_lambda

__all__ = [
    "SparseBasis",
    "SparseCode",
    "SparseModel",
    "SpectralModel",
    "SvdModel",
    "build_basis",
    "fista_solve",
    "fit_svd",
    "svd_decode",
    "svd_encode",
    "top_k_refit",
    "tune_lambda",
]
