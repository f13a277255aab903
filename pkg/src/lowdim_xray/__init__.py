"""lowdim-xray - invertible low-dimensional models of X-ray attenuation spectra."""

__version__ = "0.1.0"
