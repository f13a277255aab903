from abc import ABC, abstractmethod
from typing import Any

import numpy as np

from ..errors import ShapeError


class SpectralModel(ABC):
    """Abstract base class for all fitted spectrum models.

    Models work on standardized spectra, one spectrum per row.
    """

    kind: str = "base"

    @property
    @abstractmethod
    def input_len(self) -> int:
        """Number of energy bins the model was fitted on."""
        raise NotImplementedError

    @abstractmethod
    def reconstruct(self, spectra: np.ndarray) -> np.ndarray:
        """Compress and reconstruct a batch of spectra."""
        raise NotImplementedError

    @abstractmethod
    def to_dict(self) -> dict[str, Any]:
        """JSON-serializable description, including ``kind``."""
        raise NotImplementedError

    def check_width(self, spectra: np.ndarray) -> np.ndarray:
        spectra = np.asarray(spectra, dtype=float)
        if spectra.shape[-1] != self.input_len:
            raise ShapeError(f"{self.kind} model expects {self.input_len} bins, got {spectra.shape[-1]}")
        return spectra
