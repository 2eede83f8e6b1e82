"""Numerical laboratory for the complex modified KdV equation."""

__version__ = "0.1.0"
