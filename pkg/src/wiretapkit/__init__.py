"""Finite-blocklength toolkit for uniform compression and wiretap multiplexing."""

from .prob import JointPmf, Pmf

__all__ = ["Pmf", "JointPmf"]
__version__ = "0.1.0"
