"""Spectral analysis of heavy-tailed linear processes: stable sampling, periodograms,
integrated-periodogram function classes and Monte Carlo checks of their limit theory."""

from .stable_rng import ParameterError, RngStream, StableLaw

__all__ = ["ParameterError", "RngStream", "StableLaw"]
__version__ = "0.1.0"
