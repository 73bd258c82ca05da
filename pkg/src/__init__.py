"""Tunnelling splittings of anisotropic spin Hamiltonians."""

__version__ = "0.1.0"
