"""Exact symbolic engine for deformed bi-Hamiltonian Poisson pencils."""

__version__ = "0.1.0"
