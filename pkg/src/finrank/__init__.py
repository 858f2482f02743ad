"""Finite-rank perturbations of the Laplacian: resolvents, propagators and dispersive checks."""

__version__ = "0.1.0"
