"""Tabulated elemental mass attenuation data and resampling onto energy grids."""

import csv
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import MissingTableError, ParseError, RangeError, ValidationError
from .grid import EnergyGrid, Spectrum, SpectrumUnits

logger = logging.getLogger(__name__)

MAX_Z = 92
TABLE_HEADER = ("energy_kev", "mac_cm2_per_g")
DENSITY_HEADER = ("z", "symbol", "density_g_per_cm3")
DENSITY_FILE = "densities.csv"

_TABLE_NAME = re.compile(r"^z(\d+)\.csv$")


def table_filename(z: int) -> str:
    return f"z{z:02d}.csv"


@dataclass(frozen=True)
class AttenuationTable:
    """Mass attenuation samples of one element.

    Duplicated adjacent energies mark absorption edges: the first row holds the
    pre-edge value and the second the (larger) post-edge value.
    """

    z: int
    symbol: str
    density: float
    energies: np.ndarray
    mac: np.ndarray

    def __post_init__(self) -> None:
        if not 1 <= self.z <= MAX_Z:
            raise RangeError(f"atomic number must be in 1..{MAX_Z}, got {self.z}")
        if not self.density > 0.0:
            raise ValidationError(f"Z={self.z}: density must be positive, got {self.density}")

        energies = np.array(self.energies, dtype=float)
        mac = np.array(self.mac, dtype=float)
        if energies.ndim != 1 or energies.shape != mac.shape or energies.size < 2:
            raise ValidationError(f"Z={self.z}: need at least two (energy, mac) samples of equal length")
        if np.any(mac <= 0.0) or not np.all(np.isfinite(mac)):
            raise ValidationError(f"Z={self.z}: mass attenuation values must be positive and finite")
        if np.any(energies <= 0.0):
            raise ValidationError(f"Z={self.z}: energies must be positive")

        steps = np.diff(energies)
        if np.any(steps < 0.0):
            raise ValidationError(f"Z={self.z}: energies are not sorted")
        dup = np.flatnonzero(steps == 0.0)
        if np.any(np.diff(dup) == 1):
            raise ValidationError(f"Z={self.z}: an energy appears more than twice")
        for i in dup:
            if not mac[i + 1] > mac[i]:
                raise ValidationError(f"Z={self.z}: edge at {energies[i]} keV must increase the attenuation")

        energies.setflags(write=False)
        mac.setflags(write=False)
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "mac", mac)

    @property
    def edges(self) -> np.ndarray:
        """Energies of all tabulated absorption edges, ascending."""
        return self.energies[np.flatnonzero(np.diff(self.energies) == 0.0)]

    @property
    def k_edge(self) -> float | None:
        """The highest tabulated edge, which is the K edge when it lies in the sampled range."""
        edges = self.edges
        return float(edges[-1]) if edges.size else None

    def covers(self, grid: EnergyGrid) -> bool:
        return bool(self.energies[0] <= grid.e_min and self.energies[-1] >= grid.e_max)

    def mac_at(self, energies: np.ndarray) -> np.ndarray:
        """Log-log interpolation; at an edge energy the post-edge branch is used."""
        e = np.asarray(energies, dtype=float)
        if np.any(e < self.energies[0]) or np.any(e > self.energies[-1]):
            raise RangeError(
                f"Z={self.z}: energies outside the tabulated range [{self.energies[0]}, {self.energies[-1]}] keV"
            )
        n = self.energies.size
        idx = np.clip(np.searchsorted(self.energies, e, side="right"), 1, n - 1)
        e0, e1 = self.energies[idx - 1], self.energies[idx]
        log_m0, log_m1 = np.log(self.mac[idx - 1]), np.log(self.mac[idx])

        span = np.log(e1) - np.log(e0)
        safe_span = np.where(span > 0.0, span, 1.0)
        frac = np.where(span > 0.0, (np.log(e) - np.log(e0)) / safe_span, 1.0)
        return np.exp(log_m0 + frac * (log_m1 - log_m0))


def load_densities(path: Path) -> dict[int, tuple[str, float]]:
    """Read ``densities.csv`` into ``{z: (symbol, density)}``."""
    densities: dict[int, tuple[str, float]] = {}
    with Path(path).open("r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != DENSITY_HEADER:
            raise ParseError(f"{path}: expected header {','.join(DENSITY_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                z, symbol, density = int(row[0]), row[1].strip(), float(row[2])
            except (IndexError, ValueError) as e:
                raise ParseError(f"{path}:{lineno}: malformed row {row!r}") from e
            densities[z] = (symbol, density)
    return densities


def load_attenuation_table(path: Path, densities_path: Path | None = None) -> AttenuationTable:
    """Load ``z{ZZ}.csv``; density and symbol come from ``densities.csv`` next to it unless given."""
    path = Path(path)
    match = _TABLE_NAME.match(path.name)
    if not match:
        raise ParseError(f"{path.name}: element files must be named z{{ZZ}}.csv")
    z = int(match.group(1))
    if not 1 <= z <= MAX_Z:
        raise RangeError(f"{path.name}: atomic number must be in 1..{MAX_Z}, got {z}")

    if not path.exists():
        raise MissingTableError(f"no attenuation table for Z={z} at {path}")

    energies: list[float] = []
    mac: list[float] = []
    with path.open("r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TABLE_HEADER:
            raise ParseError(f"{path}: expected header {','.join(TABLE_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                energies.append(float(row[0]))
                mac.append(float(row[1]))
            except ValueError as e:
                raise ParseError(f"{path}:{lineno}: malformed row {row!r}") from e

    densities = load_densities(densities_path or path.parent / DENSITY_FILE)
    if z not in densities:
        raise MissingTableError(f"no density recorded for Z={z}")
    symbol, density = densities[z]
    return AttenuationTable(z=z, symbol=symbol, density=density, energies=np.array(energies), mac=np.array(mac))


def lac_on_grid(table: AttenuationTable, grid: EnergyGrid) -> Spectrum:
    """Linear attenuation coefficient (1/cm) of the pure element at each bin centre."""
    return Spectrum(table.density * table.mac_at(grid.centers), SpectrumUnits.PHYSICAL)


@dataclass
class ElementLibrary:
    """All element tables of a data directory, with per-grid LAC matrices cached."""

    tables: dict[int, AttenuationTable]
    _lac_cache: dict[EnergyGrid, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def atomic_numbers(self) -> list[int]:
        return sorted(self.tables)

    def table(self, z: int) -> AttenuationTable:
        try:
            return self.tables[z]
        except KeyError:
            raise MissingTableError(f"no attenuation table loaded for Z={z}") from None

    def lac_matrix(self, grid: EnergyGrid) -> np.ndarray:
        """Rows indexed by ``z - 1``: the LAC of every element on ``grid``."""
        if grid not in self._lac_cache:
            matrix = np.full((MAX_Z, grid.n_bins), np.nan)
            for z, table in self.tables.items():
                matrix[z - 1] = lac_on_grid(table, grid).values
            matrix.setflags(write=False)
            self._lac_cache[grid] = matrix
        return self._lac_cache[grid]

    def k_edge_class(self, grid: EnergyGrid) -> frozenset[int]:
        """Elements with Z > 42 whose K edge lies strictly inside the grid range."""
        members = set()
        for z, table in self.tables.items():
            edge = table.k_edge
            if z > 42 and edge is not None and grid.e_min < edge < grid.e_max:
                members.add(z)
        return frozenset(members)


def load_element_library(data_dir: Path, atomic_numbers: list[int] | None = None) -> ElementLibrary:
    """Load element tables (all 92 by default) from ``data_dir``."""
    data_dir = Path(data_dir)
    densities_path = data_dir / DENSITY_FILE
    if not densities_path.exists():
        raise MissingTableError(f"density file not found: {densities_path}")

    tables = {}
    for z in atomic_numbers or range(1, MAX_Z + 1):
        path = data_dir / table_filename(z)
        if not path.exists():
            raise MissingTableError(f"missing element file for Z={z}: {path}")
        tables[z] = load_attenuation_table(path, densities_path)
    logger.info("Loaded %d element tables from %s", len(tables), data_dir)
    return ElementLibrary(tables)
