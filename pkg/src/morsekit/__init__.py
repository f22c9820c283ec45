"""Desk-scale coarse geometry: hyperbolicity, Morse gauges, boundary maps and extensions."""

__version__ = "0.1.0"
