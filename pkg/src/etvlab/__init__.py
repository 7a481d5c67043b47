"""Genealogical impact (ETV) dynamics of a TSP genetic algorithm."""

__version__ = "0.1.0"
