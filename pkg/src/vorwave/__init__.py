"""Spectral toolkit for quasi-periodic traveling gravity-capillary waves with constant vorticity."""

from .dispersion import WavePhysics

__version__ = "0.1.0"

__all__ = ["WavePhysics", "__version__"]
