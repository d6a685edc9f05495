"""Slow-manifold and adiabatic SSM reduction and control toolkit."""

__version__ = "0.1.0"
