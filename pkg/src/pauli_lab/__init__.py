"""Numerical laboratory for low-lying eigenvalues of the semiclassical Dirichlet-Pauli operator."""

__version__ = "0.1.0"
