"""Numerical lab for thick control sets, spectral inequalities and heat null-control."""

__version__ = "0.1.0"
