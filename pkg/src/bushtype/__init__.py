"""Symmetric Bush-type Hadamard matrices of order 4m^4 from reversible Hadamard difference sets."""

__version__ = "0.1.0"
