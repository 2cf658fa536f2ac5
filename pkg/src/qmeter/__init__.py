"""Finite-duration von Neumann position measurement of a driven harmonic oscillator."""

__version__ = "0.1.0"
