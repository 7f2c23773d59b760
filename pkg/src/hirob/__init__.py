"""Certification toolkit for highly robust efficiency in uncertain multi-objective programs."""

__version__ = "0.1.0"
