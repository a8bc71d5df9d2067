"""Desk-scale laboratory for mean dimension with potential."""

__version__ = "0.1.0"
