"""Finite-level lattice and group cohomology computations for Galois gerbe bands."""

__version__ = "0.1.0"
