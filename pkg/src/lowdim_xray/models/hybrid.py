"""Rank-2 SVD followed by an autoencoder on what the SVD leaves over."""

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..errors import IncompatibleModelError, ShapeError, ValidationError
from ..neural.network import ArchKind, Network, NetworkArch, init_network
from ..neural.training import TrainConfig, TrainHistory, train_denoising
from ..synth.dataset import Dataset, StandardizationStats
from ..utils import FORMAT_VERSION
from .base import SpectralModel
from .linear import SvdModel, fit_svd

logger = logging.getLogger(__name__)

SVD_RANK = 2
AE_LATENT_DIM = 3


@dataclass
class HybridModel(SpectralModel):
    svd: SvdModel
    ae: Network
    stats: StandardizationStats | None = None

    kind = "hybrid"

    def __post_init__(self) -> None:
        if self.svd.rank != SVD_RANK or self.ae.latent_dim != AE_LATENT_DIM:
            raise ValidationError(
                f"hybrid needs a rank-{SVD_RANK} SVD and a {AE_LATENT_DIM}-dim latent space, "
                f"got rank {self.svd.rank} and latent {self.ae.latent_dim}"
            )
        if self.svd.grid_bins != self.ae.input_len:
            raise ShapeError(f"SVD covers {self.svd.grid_bins} bins, autoencoder {self.ae.input_len}")

    @property
    def input_len(self) -> int:
        return self.svd.grid_bins

    @property
    def code_len(self) -> int:
        return self.svd.rank + self.ae.latent_dim

    def residual(self, spectra: np.ndarray) -> np.ndarray:
        return spectra - self.svd.project(spectra)

    def reconstruct(self, spectra: np.ndarray) -> np.ndarray:
        return hybrid_apply(self, spectra)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "format_version": FORMAT_VERSION,
            "svd": self.svd.to_dict(),
            "network": self.ae.to_dict(),
            "stats": self.stats.to_dict() if self.stats is not None else None,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "HybridModel":
        stats = StandardizationStats.from_dict(data["stats"]) if data.get("stats") else None
        return cls(svd=SvdModel.from_dict(data["svd"]), ae=Network.from_dict(data["network"]), stats=stats)


def check_compatible(a: Dataset, b: Dataset) -> None:
    if a.spec.grid != b.spec.grid:
        raise IncompatibleModelError(f"datasets {a.name} and {b.name} use different energy grids")
    if not (np.array_equal(a.stats.mean, b.stats.mean) and np.array_equal(a.stats.std, b.stats.std)):
        raise IncompatibleModelError(f"datasets {a.name} and {b.name} are standardized with different statistics")


def fit_hybrid(
    no_kedge_clean: Dataset,
    kedge_noisy: Dataset,
    arch_kind: ArchKind | NetworkArch,
    config: TrainConfig,
    val: Dataset | None = None,
) -> tuple[HybridModel, TrainHistory]:
    """Fit the SVD on spectra without K edges, then train the autoencoder on the residuals.

    Autoencoder inputs are the residuals of the noisy spectra, targets the
    residuals of the clean ones.
    """
    check_compatible(no_kedge_clean, kedge_noisy)
    if val is not None:
        check_compatible(kedge_noisy, val)

    svd = fit_svd(no_kedge_clean.clean, SVD_RANK)
    if isinstance(arch_kind, NetworkArch):
        arch = arch_kind.model_copy(update={"latent_dim": AE_LATENT_DIM, "input_len": svd.grid_bins})
    else:
        arch = NetworkArch(kind=ArchKind(arch_kind), input_len=svd.grid_bins, latent_dim=AE_LATENT_DIM)
    ae = init_network(arch, config.seed)
    model = HybridModel(svd=svd, ae=ae, stats=kedge_noisy.stats)

    train_pair = (model.residual(kedge_noisy.noisy), model.residual(kedge_noisy.clean))
    val_pair = (model.residual(val.noisy), model.residual(val.clean)) if val is not None else None
    logger.info("Training %s on residuals of %d spectra", arch.kind.value, kedge_noisy.n_rows)
    _, history = train_denoising(ae, train_pair, val_pair, config)
    return model, history


def hybrid_apply(model: HybridModel, spectrum: np.ndarray) -> np.ndarray:
    """SVD projection plus the autoencoder's reconstruction of the residual."""
    spectrum = model.check_width(spectrum)
    single = spectrum.ndim == 1
    batch = np.atleast_2d(spectrum)
    projection = model.svd.project(batch)
    out = projection + model.ae.reconstruct(batch - projection)
    return out[0] if single else out


def hybrid_encode(model: HybridModel, spectrum: np.ndarray) -> np.ndarray:
    """Five numbers per spectrum: the SVD coefficients followed by the latent code of the residual."""
    spectrum = model.check_width(spectrum)
    single = spectrum.ndim == 1
    batch = np.atleast_2d(spectrum)
    coefficients = model.svd.encode(batch)
    latent = model.ae.encode(batch - model.svd.decode(coefficients))
    code = np.concatenate([coefficients, latent], axis=1)
    return code[0] if single else code


def hybrid_decode(model: HybridModel, code: np.ndarray) -> np.ndarray:
    code = np.asarray(code, dtype=float)
    if code.shape[-1] != model.code_len:
        raise ShapeError(f"hybrid codes have {model.code_len} values, got {code.shape[-1]}")
    single = code.ndim == 1
    batch = np.atleast_2d(code)
    rank = model.svd.rank
    out = model.svd.decode(batch[:, :rank]) + model.ae.decode(batch[:, rank:])
    return out[0] if single else out
