"""Build the vendored element tables from the offline xraydb database."""

import csv
import logging
from pathlib import Path

import numpy as np
import xraydb

from ..errors import ValidationError
from .tables import DENSITY_FILE, DENSITY_HEADER, MAX_Z, TABLE_HEADER, table_filename

logger = logging.getLogger(__name__)

# relative distances from an edge at which the two branches are evaluated
EDGE_OFFSETS = (1e-4, 1e-3)


def _edge_rows(symbol: str, edge_kev: float) -> tuple[float, float] | None:
    for offset in EDGE_OFFSETS:
        energies_ev = 1000.0 * edge_kev * np.array([1.0 - offset, 1.0 + offset])
        below, above = (float(v) for v in xraydb.mu_elam(symbol, energies_ev, kind="total"))
        if above > below:
            return below, above
    return None


def element_rows(z: int, e_lo: float = 10.0, e_hi: float = 200.0, n_points: int = 81) -> list[tuple[float, float]]:
    """(energy keV, mac cm2/g) rows for one element, edges as duplicated energies."""
    symbol = xraydb.atomic_symbol(z)
    edges = sorted(
        edge.energy / 1000.0 for edge in xraydb.xray_edges(symbol).values() if e_lo < edge.energy / 1000.0 < e_hi
    )

    samples = [float(f"{e:.6g}") for e in np.geomspace(e_lo, e_hi, n_points)]
    samples = [e for e in samples if all(abs(e - edge) > EDGE_OFFSETS[-1] * edge for edge in edges)]
    values = xraydb.mu_elam(symbol, 1000.0 * np.array(samples), kind="total")
    rows = [(e, float(m)) for e, m in zip(samples, values, strict=True)]

    for edge in edges:
        branches = _edge_rows(symbol, edge)
        if branches is None:
            logger.warning("Z=%d (%s): no attenuation jump found at the %.4f keV edge, skipping it", z, symbol, edge)
            continue
        rows.append((edge, branches[0]))
        rows.append((edge, branches[1]))

    # stable sort keeps each pre-edge row ahead of its post-edge row
    rows.sort(key=lambda row: row[0])
    if any(m <= 0.0 for _, m in rows):
        raise ValidationError(f"Z={z}: xraydb returned a non-positive attenuation value")
    return rows


def ingest_elements(out_dir: Path, e_lo: float = 10.0, e_hi: float = 200.0, n_points: int = 81) -> list[Path]:
    """Write ``z01.csv`` ... ``z92.csv`` and ``densities.csv`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    density_rows = []
    for z in range(1, MAX_Z + 1):
        symbol = xraydb.atomic_symbol(z)
        density = float(xraydb.atomic_density(symbol))
        if not density > 0.0:
            raise ValidationError(f"Z={z} ({symbol}): no usable density in xraydb")
        density_rows.append((z, symbol, density))

        path = out_dir / table_filename(z)
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(TABLE_HEADER)
            for energy, mac in element_rows(z, e_lo, e_hi, n_points):
                writer.writerow((repr(energy), repr(mac)))
        written.append(path)

    density_path = out_dir / DENSITY_FILE
    with density_path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(DENSITY_HEADER)
        for z, symbol, density in density_rows:
            writer.writerow((z, symbol, repr(density)))
    written.append(density_path)

    logger.info("Wrote %d element tables to %s", MAX_Z, out_dir)
    return written
