"""Bimodules, Connes fusion, duality and index over multi-matrix algebras."""

__version__ = "0.1.0"
