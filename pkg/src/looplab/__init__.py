"""Desk-scale numerical laboratory for restriction ratios of lattice loop
ensembles and rotation numbers of circle maps."""

__version__ = "0.1.0"
