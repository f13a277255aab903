"""Attenuation physics: element tables, energy grids and the PCB model."""

from .grid import EnergyGrid, Spectrum, SpectrumUnits
from .pcb import PcbCoefficients, fit_pcb, klein_nishina, pcb_coefficients, photoelectric_basis
from .tables import AttenuationTable, ElementLibrary, lac_on_grid, load_attenuation_table, load_element_library

__all__ = [
    "AttenuationTable",
    "ElementLibrary",
    "EnergyGrid",
    "PcbCoefficients",
    "Spectrum",
    "SpectrumUnits",
    "fit_pcb",
    "klein_nishina",
    "lac_on_grid",
    "load_attenuation_table",
    "load_element_library",
    "pcb_coefficients",
    "photoelectric_basis",
]
