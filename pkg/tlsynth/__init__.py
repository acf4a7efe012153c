"""Temporal logic parsing, monitoring and MILP-based synthesis."""

__version__ = '0.1.0'
