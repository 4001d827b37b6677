"""Unified-transform spectral toolkit for the coupled Fokas-Lenells equations on the half-line."""

__version__ = "0.1.0"
