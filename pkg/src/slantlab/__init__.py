"""Numerical verification of submanifold identities in conformal Kaehler ambients."""

__version__ = "0.1.0"
