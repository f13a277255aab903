"""Synthetic mixture datasets."""

from .dataset import (
    DEFAULT_FRACTIONS,
    Dataset,
    DatasetSpec,
    StandardizationStats,
    build_dataset,
    split_dataset,
    split_indices,
)
from .io import load_dataset, load_split, save_dataset, save_split
from .mixtures import MixtureSpec, mix_spectrum, sample_mixture

__all__ = [
    "DEFAULT_FRACTIONS",
    "Dataset",
    "DatasetSpec",
    "MixtureSpec",
    "StandardizationStats",
    "build_dataset",
    "load_dataset",
    "load_split",
    "mix_spectrum",
    "sample_mixture",
    "save_dataset",
    "save_split",
    "split_dataset",
    "split_indices",
]
