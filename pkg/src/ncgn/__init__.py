"""Combinatorics, phases and power counting for the noncommutative Gross-Neveu model."""

__version__ = "0.1.0"
