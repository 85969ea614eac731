"""Exact continued-fraction measures and rigorous Fourier decay experiments."""

__version__ = "0.1.0"
