"""Photoelectric/Compton basis (PCB) model of attenuation spectra."""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from ..errors import DomainError, NumericalError, RangeError
from .grid import EnergyGrid, Spectrum, SpectrumUnits

ELECTRON_REST_ENERGY_KEV = 511.0
PHOTOELECTRIC_CONSTANT = 9.8e-24
PHOTOELECTRIC_Z_EXPONENT = 3.8
DEFAULT_ENERGY_EXPONENT = 3.0


@dataclass(frozen=True)
class PcbCoefficients:
    a_p: float
    a_c: float


def _positive_energies(e: ArrayLike) -> np.ndarray:
    energies = np.asarray(e, dtype=float)
    if np.any(energies <= 0.0):
        raise DomainError("photon energy must be positive")
    return energies


def klein_nishina(e: ArrayLike) -> np.ndarray | float:
    """Energy dependence of Compton scattering, with alpha = E / 511 keV."""
    alpha = _positive_energies(e) / ELECTRON_REST_ENERGY_KEV
    two = 1.0 + 2.0 * alpha
    log_term = np.log1p(2.0 * alpha)
    value = (1.0 + alpha) / alpha**2 * (2.0 * (1.0 + alpha) / two - log_term / alpha) + log_term / (2.0 * alpha) - (1.0 + 3.0 * alpha) / two**2
    return float(value) if np.ndim(value) == 0 else value


def photoelectric_basis(e: ArrayLike, n: float = DEFAULT_ENERGY_EXPONENT) -> np.ndarray | float:
    """Photoelectric energy dependence ``1 / E**n``."""
    if not n > 0.0:
        raise DomainError(f"photoelectric exponent must be positive, got {n}")
    value = 1.0 / _positive_energies(e) ** n
    return float(value) if np.ndim(value) == 0 else value


def pcb_coefficients(rho_e: float, z: int) -> PcbCoefficients:
    """PCB weights of a single element from its electron density and atomic number."""
    if not rho_e > 0.0:
        raise DomainError(f"electron density must be positive, got {rho_e}")
    if not 1 <= z <= 92:
        raise RangeError(f"atomic number must be in 1..92, got {z}")
    return PcbCoefficients(a_p=rho_e * PHOTOELECTRIC_CONSTANT * z**PHOTOELECTRIC_Z_EXPONENT, a_c=rho_e)


def pcb_design_matrix(grid: EnergyGrid, n: float = DEFAULT_ENERGY_EXPONENT) -> np.ndarray:
    centers = grid.centers
    return np.column_stack([photoelectric_basis(centers, n), klein_nishina(centers)])


def fit_pcb(spectrum: Spectrum, grid: EnergyGrid, n: float = DEFAULT_ENERGY_EXPONENT) -> tuple[PcbCoefficients, Spectrum]:
    """Least-squares fit of a physical spectrum onto the photoelectric and Klein-Nishina columns."""
    if spectrum.units is not SpectrumUnits.PHYSICAL:
        raise DomainError("the PCB model is fitted to physical spectra")
    spectrum.check_grid(grid)

    design = pcb_design_matrix(grid, n)
    # columns differ by orders of magnitude; scale before the rank test and the solve
    scale = np.linalg.norm(design, axis=0)
    scaled = design / scale
    if np.linalg.matrix_rank(scaled) < 2:
        raise NumericalError("PCB design matrix is rank deficient on this grid")

    solution, *_ = np.linalg.lstsq(scaled, spectrum.values, rcond=None)
    a_p, a_c = solution / scale
    recon = Spectrum(design @ np.array([a_p, a_c]), SpectrumUnits.PHYSICAL, approximation=True)
    return PcbCoefficients(a_p=float(a_p), a_c=float(a_c)), recon
