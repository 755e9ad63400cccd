"""Spectral laboratory for the modulation-restricted normal form of periodic KdV."""

__version__ = "0.1.0"
