"""Cutoff-based verification of prompt temporal properties for parameterized systems."""

__version__ = "0.1.0"
