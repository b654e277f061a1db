"""Focusing self-similar solutions of the thin film equation."""

__version__ = "0.1.0"
