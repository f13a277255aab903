"""Energy grids and spectra sampled on them."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import ShapeError, ValidationError


class EnergyGrid(BaseModel):
    """Equal-width energy bins between ``e_min`` and ``e_max`` (keV); values are taken at bin centres."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    e_min: float = Field(default=20.0, gt=0.0)
    e_max: float = 150.0
    n_bins: int = Field(default=26, ge=2)

    @model_validator(mode="after")
    def _check_range(self) -> "EnergyGrid":
        if not self.e_min < self.e_max:
            raise ValueError(f"e_min must be below e_max, got {self.e_min} >= {self.e_max}")
        return self

    @property
    def bin_width(self) -> float:
        return (self.e_max - self.e_min) / self.n_bins

    @property
    def centers(self) -> np.ndarray:
        return self.e_min + (np.arange(self.n_bins) + 0.5) * self.bin_width


class SpectrumUnits(str, Enum):
    PHYSICAL = "physical_lac_per_cm"
    STANDARDIZED = "standardized"


@dataclass(frozen=True)
class Spectrum:
    """Attenuation values on a grid, either in 1/cm or standardized units."""

    values: np.ndarray
    units: SpectrumUnits = SpectrumUnits.PHYSICAL
    # model reconstructions may dip below zero where the fit is poor
    approximation: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise ShapeError(f"spectrum values must be one-dimensional, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("spectrum values must be finite")
        if self.units is SpectrumUnits.PHYSICAL and not self.approximation and np.any(values <= 0.0):
            raise ValidationError("physical spectra must be strictly positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def check_grid(self, grid: EnergyGrid) -> None:
        if len(self) != grid.n_bins:
            raise ShapeError(f"spectrum has {len(self)} values but the grid has {grid.n_bins} bins")
