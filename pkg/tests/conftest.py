"""Shared fixtures: element tables on disk, libraries and small datasets."""

import csv
from pathlib import Path

import numpy as np
import pytest

from lowdim_xray.physics.tables import DENSITY_FILE, DENSITY_HEADER, MAX_Z, TABLE_HEADER, load_element_library, table_filename
from lowdim_xray.synth.dataset import DatasetSpec, build_dataset


def toy_k_edge(z: int) -> float | None:
    """Moseley-like K-edge energy (keV); only elements above Z=42 get one, all inside 20-150 keV."""
    return 0.0136 * (z - 1) ** 2 if z > 42 else None


def toy_rows(z: int) -> list[tuple[float, float]]:
    """Smooth photoelectric-plus-Compton-like attenuation with a tripling at the K edge."""
    energies = [float(e) for e in np.geomspace(10.0, 200.0, 60)]
    edge = toy_k_edge(z)

    def mac(e: float, above_edge: bool) -> float:
        value = 0.15 + 2e-3 * z**3 * (20.0 / e) ** 3
        return value * 3.0 if above_edge else value

    rows = [(e, mac(e, edge is not None and e > edge)) for e in energies if edge is None or abs(e - edge) > 1e-6]
    if edge is not None:
        rows += [(edge, mac(edge, False)), (edge, mac(edge, True))]
    rows.sort(key=lambda row: row[0])
    return rows


def write_toy_tables(directory: Path, atomic_numbers: range = range(1, MAX_Z + 1)) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    for z in atomic_numbers:
        with open(directory / table_filename(z), "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(TABLE_HEADER)
            for energy, value in toy_rows(z):
                writer.writerow((repr(energy), repr(value)))
    with open(directory / DENSITY_FILE, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(DENSITY_HEADER)
        for z in atomic_numbers:
            writer.writerow((z, f"E{z}", repr(1.0 + z / 10.0)))
    return directory


@pytest.fixture(scope="session")
def toy_element_dir(tmp_path_factory):
    """All 92 toy element tables written as CSV files."""
    return write_toy_tables(tmp_path_factory.mktemp("toy_elements"))


@pytest.fixture(scope="session")
def toy_library(toy_element_dir):
    return load_element_library(toy_element_dir)


@pytest.fixture(scope="session")
def element_dir(tmp_path_factory):
    """Element tables generated from xraydb, once per session."""
    from lowdim_xray.physics.ingest import ingest_elements

    directory = tmp_path_factory.mktemp("elements")
    ingest_elements(directory)
    return directory


@pytest.fixture(scope="session")
def library(element_dir):
    return load_element_library(element_dir)


@pytest.fixture(scope="session")
def toy_dataset(toy_library):
    """200 two-element mixtures on the default grid."""
    return build_dataset(DatasetSpec(name="D2E", n_elements=2, n_objects=200, seed=7), toy_library)


@pytest.fixture(scope="session")
def toy_no_kedge(toy_library, toy_dataset):
    """Mixtures without K-edge elements, standardized like ``toy_dataset``."""
    spec = DatasetSpec(name="D2E_0K", n_elements=2, n_objects=100, k_edges=0, seed=8)
    return build_dataset(spec, toy_library, toy_dataset.stats, "D2E")
