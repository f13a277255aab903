"""JSON experiment configurations: which datasets to build, which models to fit and what to evaluate."""

import json
from enum import Enum
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import MissingArtifactError, ParseError, ValidationError
from .evaluation.evaluator import InputMode
from .neural.network import ArchKind
from .neural.training import TrainConfig
from .physics.grid import EnergyGrid
from .synth.dataset import DEFAULT_FRACTIONS, DatasetSpec
from .synth.mixtures import MAX_COMPONENTS
from .utils import derive_seed


class SplitFractions(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    train: float = Field(default=DEFAULT_FRACTIONS[0], ge=0.0)
    val: float = Field(default=DEFAULT_FRACTIONS[1], ge=0.0)
    test: float = Field(default=DEFAULT_FRACTIONS[2], ge=0.0)

    @model_validator(mode="after")
    def _check_sum(self) -> "SplitFractions":
        if abs(self.train + self.val + self.test - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {self.train + self.val + self.test}")
        return self

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.train, self.val, self.test)


class DatasetEntry(BaseModel):
    """One dataset of an experiment; unset fields fall back to the experiment's grid and seed."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = Field(min_length=1)
    n_elements: int = Field(ge=1, le=MAX_COMPONENTS)
    n_objects: int = Field(ge=1)
    k_edges: int | None = Field(default=None, ge=0)
    n_bins: int | None = Field(default=None, ge=2)
    noise_sigma: float = Field(default=0.1, ge=0.0)
    seed: int | None = Field(default=None, ge=0)
    # standardize with the statistics of an earlier dataset instead of this one's own
    stats_from: str | None = None

    @model_validator(mode="after")
    def _check_rule(self) -> "DatasetEntry":
        if self.k_edges is not None and self.k_edges > self.n_elements:
            raise ValueError(f"{self.name}: k_edges ({self.k_edges}) exceeds n_elements ({self.n_elements})")
        return self


class ModelKind(str, Enum):
    SVD = "svd"
    FISTA = "fista"
    NEURAL = "neural"
    HYBRID = "hybrid"


class ModelSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = Field(min_length=1)
    kind: ModelKind
    dataset: str
    seed: int | None = Field(default=None, ge=0)
    max_train_rows: int | None = Field(default=None, ge=1)

    # svd
    rank: int = Field(default=5, ge=1)

    # neural and hybrid
    arch: ArchKind | None = None
    latent_dim: int = Field(default=5, ge=1)
    widths: tuple[int, ...] | None = None
    train: TrainConfig = Field(default_factory=TrainConfig)
    no_kedge_dataset: str | None = None

    # fista
    lam: float = Field(default=0.01, ge=0.0)
    lambda_grid: list[float] = Field(default_factory=list)
    k_select: int = Field(default=5, ge=1)
    max_iters: int = Field(default=2000, ge=1)
    tol: float = Field(default=1e-8, gt=0.0)
    tune_rows: int = Field(default=1000, ge=1)

    @model_validator(mode="after")
    def _check_kind(self) -> "ModelSpec":
        if self.kind in (ModelKind.NEURAL, ModelKind.HYBRID) and self.arch is None:
            raise ValueError(f"{self.name}: {self.kind.value} models need an arch")
        if self.kind is ModelKind.HYBRID and self.no_kedge_dataset is None:
            raise ValueError(f"{self.name}: hybrid models need no_kedge_dataset for the SVD stage")
        if any(v < 0.0 for v in self.lambda_grid):
            raise ValueError(f"{self.name}: lambda_grid values must be non-negative")
        return self

    def referenced_datasets(self) -> list[str]:
        return [self.dataset] + ([self.no_kedge_dataset] if self.no_kedge_dataset else [])


class EvaluationSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    model: str
    dataset: str
    split: Literal["train", "val", "test", "all"] = "test"
    input_mode: InputMode = InputMode.NOISY


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "experiment"
    data_dir: Path | None = None
    out_dir: Path | None = None
    seed: int | None = Field(default=None, ge=0)
    grid: EnergyGrid = Field(default_factory=EnergyGrid)
    split: SplitFractions = Field(default_factory=SplitFractions)
    datasets: list[DatasetEntry] = Field(min_length=1)
    models: list[ModelSpec] = Field(default_factory=list)
    evaluations: list[EvaluationSpec] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_references(self) -> "ExperimentConfig":
        dataset_names = [d.name for d in self.datasets]
        model_names = [m.name for m in self.models]
        for label, names in (("dataset", dataset_names), ("model", model_names)):
            duplicates = sorted({n for n in names if names.count(n) > 1})
            if duplicates:
                raise ValueError(f"duplicate {label} names: {', '.join(duplicates)}")

        for index, entry in enumerate(self.datasets):
            if entry.stats_from is not None and entry.stats_from not in dataset_names[:index]:
                raise ValueError(f"dataset {entry.name}: stats_from {entry.stats_from!r} must name an earlier dataset")
        for spec in self.models:
            for ref in spec.referenced_datasets():
                if ref not in dataset_names:
                    raise ValueError(f"model {spec.name}: unknown dataset {ref!r}")
        for evaluation in self.evaluations:
            if evaluation.model not in model_names:
                raise ValueError(f"evaluation: unknown model {evaluation.model!r}")
            if evaluation.dataset not in dataset_names:
                raise ValueError(f"evaluation: unknown dataset {evaluation.dataset!r}")
        return self

    @classmethod
    def load(cls, path: Path) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise MissingArtifactError(f"experiment config not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}: invalid JSON: {e}") from e
        return cls.model_validate(data)

    def dataset(self, name: str) -> DatasetEntry:
        for entry in self.datasets:
            if entry.name == name:
                return entry
        raise ValidationError(f"unknown dataset {name!r}")

    def model(self, name: str) -> ModelSpec:
        for spec in self.models:
            if spec.name == name:
                return spec
        raise ValidationError(f"unknown model {name!r}")

    def dataset_grid(self, entry: DatasetEntry) -> EnergyGrid:
        if entry.n_bins is None:
            return self.grid
        return EnergyGrid(e_min=self.grid.e_min, e_max=self.grid.e_max, n_bins=entry.n_bins)

    def dataset_spec(self, name: str, seed: int) -> DatasetSpec:
        """The dataset recipe, with its seed derived from the experiment seed unless set explicitly."""
        entry = self.dataset(name)
        return DatasetSpec(
            name=entry.name,
            n_elements=entry.n_elements,
            n_objects=entry.n_objects,
            k_edges=entry.k_edges,
            grid=self.dataset_grid(entry),
            noise_sigma=entry.noise_sigma,
            seed=entry.seed if entry.seed is not None else derive_seed(seed, "dataset", entry.name),
        )

    def model_seed(self, name: str, seed: int) -> int:
        spec = self.model(name)
        return spec.seed if spec.seed is not None else derive_seed(seed, "model", spec.name)

    @staticmethod
    def split_seed(dataset_name: str, seed: int) -> int:
        return derive_seed(seed, "split", dataset_name)
