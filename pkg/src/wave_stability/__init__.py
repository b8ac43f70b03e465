"""Periodic traveling waves of the Ostrovsky and short-pulse equations."""

__version__ = "0.1.0"
