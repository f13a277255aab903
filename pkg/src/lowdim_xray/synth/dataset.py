"""Synthetic spectral datasets: generation, standardization and splitting."""

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import DegenerateStatsError, EmptySplitError, ShapeError, ValidationError
from ..physics.grid import EnergyGrid
from ..physics.tables import ElementLibrary
from ..utils import row_rng
from .mixtures import MAX_COMPONENTS, MixtureSpec, check_rule, sample_mixture

logger = logging.getLogger(__name__)

DEFAULT_FRACTIONS = (0.72, 0.20, 0.08)
SPLIT_NAMES = ("train", "val", "test")


class DatasetSpec(BaseModel):
    """Recipe for one dataset. ``k_edges=None`` means the K-edge count is unconstrained."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = Field(min_length=1)
    n_elements: int = Field(ge=1, le=MAX_COMPONENTS)
    n_objects: int = Field(ge=1)
    k_edges: int | None = Field(default=None, ge=0)
    grid: EnergyGrid = Field(default_factory=EnergyGrid)
    noise_sigma: float = Field(default=0.1, ge=0.0)
    seed: int | None = Field(default=None, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _check_rule(self) -> "DatasetSpec":
        if self.k_edges is not None and self.k_edges > self.n_elements:
            raise ValueError(f"exactly({self.k_edges}) K edges needs k <= n_elements ({self.n_elements})")
        return self

    @property
    def k_edge_rule(self) -> str:
        return "unconstrained" if self.k_edges is None else f"exactly({self.k_edges})"


@dataclass(frozen=True)
class StandardizationStats:
    """Per-bin mean and standard deviation used to standardize spectra."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        mean = np.ascontiguousarray(self.mean, dtype=float)
        std = np.ascontiguousarray(self.std, dtype=float)
        if mean.ndim != 1 or mean.shape != std.shape:
            raise ShapeError(f"mean and std must be vectors of equal length, got {mean.shape} and {std.shape}")
        if not np.all(std > 0.0):
            raise DegenerateStatsError(f"zero standard deviation in bin(s) {np.flatnonzero(~(std > 0.0)).tolist()}")
        mean.setflags(write=False)
        std.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @classmethod
    def from_data(cls, physical: np.ndarray) -> "StandardizationStats":
        return cls(mean=physical.mean(axis=0), std=physical.std(axis=0))

    @property
    def n_bins(self) -> int:
        return int(self.mean.shape[0])

    def _check(self, values: np.ndarray) -> None:
        if values.shape[-1] != self.n_bins:
            raise ShapeError(f"expected {self.n_bins} bins, got {values.shape[-1]}")

    def standardize(self, physical: np.ndarray) -> np.ndarray:
        physical = np.asarray(physical, dtype=float)
        self._check(physical)
        return (physical - self.mean) / self.std

    def destandardize(self, standardized: np.ndarray) -> np.ndarray:
        standardized = np.asarray(standardized, dtype=float)
        self._check(standardized)
        return standardized * self.std + self.mean

    def to_dict(self) -> dict[str, Any]:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "StandardizationStats":
        return cls(mean=np.array(data["mean"], dtype=float), std=np.array(data["std"], dtype=float))


@dataclass(frozen=True)
class Dataset:
    """Standardized clean and noisy spectra with their mixtures.

    ``row_ids`` are the row numbers in the generated dataset, so subsets keep
    their provenance.
    """

    spec: DatasetSpec
    clean: np.ndarray
    noisy: np.ndarray
    mixtures: tuple[MixtureSpec, ...]
    stats: StandardizationStats
    row_ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    stats_source: str | None = None

    def __post_init__(self) -> None:
        n_bins = self.spec.grid.n_bins
        rows = len(self.mixtures)
        for label, matrix in (("clean", self.clean), ("noisy", self.noisy)):
            if matrix.shape != (rows, n_bins):
                raise ShapeError(f"{label} has shape {matrix.shape}, expected ({rows}, {n_bins})")
        if self.stats.n_bins != n_bins:
            raise ShapeError(f"stats cover {self.stats.n_bins} bins, grid has {n_bins}")
        row_ids = np.arange(rows) if self.row_ids.size == 0 and rows else np.asarray(self.row_ids, dtype=int)
        if row_ids.shape != (rows,):
            raise ShapeError(f"row_ids has shape {row_ids.shape}, expected ({rows},)")
        for matrix in (self.clean, self.noisy, row_ids):
            matrix.setflags(write=False)
        object.__setattr__(self, "row_ids", row_ids)

    @property
    def name(self) -> str:
        return self.spec.name

    @property
    def n_rows(self) -> int:
        return len(self.mixtures)

    @property
    def noise(self) -> np.ndarray:
        return self.noisy - self.clean

    def physical(self) -> np.ndarray:
        """Clean spectra in 1/cm."""
        return self.stats.destandardize(self.clean)

    def subset(self, indices: np.ndarray) -> "Dataset":
        indices = np.asarray(indices, dtype=int)
        return Dataset(
            spec=self.spec,
            clean=self.clean[indices],
            noisy=self.noisy[indices],
            mixtures=tuple(self.mixtures[i] for i in indices),
            stats=self.stats,
            row_ids=self.row_ids[indices],
            stats_source=self.stats_source,
        )


def build_dataset(
    spec: DatasetSpec,
    library: ElementLibrary,
    stats_source: StandardizationStats | None = None,
    stats_source_name: str | None = None,
) -> Dataset:
    """Generate ``spec.n_objects`` mixtures, standardize them and add Gaussian noise.

    Row ``i`` draws its mixture and then its noise from its own generator
    seeded by ``(spec.seed, i)``.
    """
    if spec.seed is None:
        raise ValidationError(f"dataset {spec.name!r} has no seed")
    grid = spec.grid
    pool = library.atomic_numbers
    k_edge_z = library.k_edge_class(grid)
    check_rule(spec.n_elements, spec.k_edges, pool, k_edge_z)
    lac = library.lac_matrix(grid)

    physical = np.empty((spec.n_objects, grid.n_bins))
    noise = np.empty((spec.n_objects, grid.n_bins))
    mixtures = []
    for row in range(spec.n_objects):
        rng = row_rng(spec.seed, row)
        mixture = sample_mixture(rng, spec.n_elements, spec.k_edges, k_edge_z, pool)
        physical[row] = mixture.weights @ lac[np.array(mixture.atomic_numbers) - 1]
        noise[row] = spec.noise_sigma * rng.standard_normal(grid.n_bins)
        mixtures.append(mixture)

    stats = stats_source if stats_source is not None else StandardizationStats.from_data(physical)
    if stats.n_bins != grid.n_bins:
        raise ShapeError(f"supplied stats cover {stats.n_bins} bins, grid has {grid.n_bins}")
    clean = stats.standardize(physical)
    logger.info(
        "Built dataset %s: %d x %d, rule %s, noise sigma %g",
        spec.name,
        spec.n_objects,
        grid.n_bins,
        spec.k_edge_rule,
        spec.noise_sigma,
    )
    return Dataset(
        spec=spec,
        clean=clean,
        noisy=clean + noise,
        mixtures=tuple(mixtures),
        stats=stats,
        stats_source=stats_source_name if stats_source is not None else None,
    )


def split_indices(
    n_rows: int, fractions: tuple[float, float, float] = DEFAULT_FRACTIONS, seed: int = 0
) -> dict[str, np.ndarray]:
    """Permute ``range(n_rows)`` and cut it into train/val/test; flooring remainders go to train."""
    if len(fractions) != 3 or any(f < 0.0 for f in fractions):
        raise ValidationError(f"fractions must be three non-negative numbers, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValidationError(f"fractions must sum to 1, got {sum(fractions)}")

    # the epsilon keeps e.g. 20000 * 0.2 from flooring to 3999
    n_val = int(np.floor(n_rows * fractions[1] + 1e-9))
    n_test = int(np.floor(n_rows * fractions[2] + 1e-9))
    n_train = n_rows - n_val - n_test
    sizes = dict(zip(SPLIT_NAMES, (n_train, n_val, n_test), strict=True))
    empty = [name for name, size in sizes.items() if size == 0]
    if empty:
        raise EmptySplitError(f"split(s) {', '.join(empty)} would be empty for {n_rows} rows and fractions {fractions}")

    order = np.random.default_rng(seed).permutation(n_rows)
    return {
        "train": order[:n_train],
        "val": order[n_train : n_train + n_val],
        "test": order[n_train + n_val :],
    }


def split_dataset(
    d: Dataset, fractions: tuple[float, float, float] = DEFAULT_FRACTIONS, seed: int = 0
) -> tuple[Dataset, Dataset, Dataset]:
    parts = split_indices(d.n_rows, fractions, seed)
    train, val, test = (d.subset(parts[name]) for name in SPLIT_NAMES)
    return train, val, test
