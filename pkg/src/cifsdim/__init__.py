"""Covering numbers of limit sets of countable conformal iterated function systems."""

__version__ = "0.1.0"
