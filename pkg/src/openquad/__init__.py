"""Steady states, dissipative gaps and correlation decay of quadratic Lindblad lattice models."""

__version__ = "0.1.0"
