import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from ..errors import IncompatibleModelError
from ..models.base import SpectralModel
from ..synth.dataset import Dataset, StandardizationStats
from .metrics import BoxStats, boxplot_stats, nmse_rows

logger = logging.getLogger(__name__)


class InputMode(str, Enum):
    NOISY = "noisy"
    CLEAN = "clean"


@dataclass
class EvalReport:
    """Per-spectrum NMSE of one model on one dataset."""

    model_name: str
    dataset_name: str
    nmse: np.ndarray
    summary: BoxStats
    input_mode: InputMode = InputMode.NOISY
    row_ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model_name,
            "dataset": self.dataset_name,
            "input_mode": self.input_mode.value,
            "n_spectra": int(self.nmse.size),
            "summary": self.summary.to_dict(),
            "row_ids": [int(r) for r in self.row_ids],
            "nmse": [float(v) for v in self.nmse],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EvalReport":
        values = np.array(data["nmse"], dtype=float)
        return cls(
            model_name=data["model"],
            dataset_name=data["dataset"],
            nmse=values,
            summary=boxplot_stats(values),
            input_mode=InputMode(data.get("input_mode", InputMode.NOISY.value)),
            row_ids=np.array(data.get("row_ids", range(values.size)), dtype=int),
        )


def _model_stats(model: SpectralModel) -> StandardizationStats | None:
    stats = getattr(model, "stats", None)
    return stats if isinstance(stats, StandardizationStats) else None


def evaluate_model(
    model: SpectralModel,
    dataset: Dataset,
    input_mode: InputMode | str = InputMode.NOISY,
    model_name: str | None = None,
) -> EvalReport:
    """Reconstruct every spectrum of ``dataset`` and score it against the clean spectrum."""
    input_mode = InputMode(input_mode)
    if model.input_len != dataset.spec.grid.n_bins:
        raise IncompatibleModelError(
            f"model expects {model.input_len} bins, dataset {dataset.name} has {dataset.spec.grid.n_bins}"
        )
    stats = _model_stats(model)
    if stats is not None and not (
        np.allclose(stats.mean, dataset.stats.mean, rtol=1e-12, atol=0.0)
        and np.allclose(stats.std, dataset.stats.std, rtol=1e-12, atol=0.0)
    ):
        raise IncompatibleModelError(f"dataset {dataset.name} is standardized differently from the model's training data")

    inputs = dataset.noisy if input_mode is InputMode.NOISY else dataset.clean
    recon = model.reconstruct(inputs)
    values = nmse_rows(dataset.clean, recon)
    summary = boxplot_stats(values)
    name = model_name or model.kind
    logger.info(
        "Evaluated %s on %s (%s input): mean NMSE %.4g, median %.4g over %d spectra",
        name,
        dataset.name,
        input_mode.value,
        summary.mean,
        summary.median,
        values.size,
    )
    return EvalReport(
        model_name=name,
        dataset_name=dataset.name,
        nmse=values,
        summary=summary,
        input_mode=input_mode,
        row_ids=dataset.row_ids.copy(),
    )
