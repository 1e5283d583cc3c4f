"""Executable security notions and counterexamples for arbitrarily varying wiretap channels."""

__version__ = "0.1.0"
