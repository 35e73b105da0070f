"""Thermodynamic formalism toolkit for finite Markov shifts."""

__version__ = "0.1.0"
