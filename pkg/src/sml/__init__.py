"""Slow manifolds of fast-slow systems: ILDM and iterative approximations."""

__version__ = "0.1.0"
