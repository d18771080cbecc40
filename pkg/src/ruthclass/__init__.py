"""Exact Atiyah cocycles and classes for representations up to homotopy."""

__version__ = "0.1.0"
