"""Sparse recovery by l1 minimization from random measurements."""

__version__ = "0.1.0"
