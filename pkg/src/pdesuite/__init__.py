"""Seedable PDE dataset generation, physics-aware error metrics and inverse IC estimation."""

__version__ = "0.1.0"
