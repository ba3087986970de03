"""Quantitative partial observability of discretized PDE models."""

__version__ = "0.1.0"
