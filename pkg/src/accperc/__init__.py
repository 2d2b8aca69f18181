"""Accessibility percolation on spherically symmetric trees."""

__version__ = "0.1.0"
