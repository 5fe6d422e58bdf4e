"""Constructive approximation of SBD displacement fields in two dimensions."""

__version__ = "0.1.0"
