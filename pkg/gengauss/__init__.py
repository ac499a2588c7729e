"""Generalized Gauss-Radau / Gauss-Lobatto quadrature with endpoint derivatives."""

__version__ = "0.1.0"
