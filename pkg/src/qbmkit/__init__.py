"""Fully visible classical and quantum Boltzmann machines as Gibbs states of two-local Pauli Hamiltonians."""

__version__ = "0.1.0"
