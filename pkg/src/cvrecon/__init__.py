"""Reverse multidimensional reconciliation for CV-QKD over turbulent free-space links."""
__version__ = "0.1.0"
