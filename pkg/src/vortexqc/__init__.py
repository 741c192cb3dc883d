"""Majorana-mode vortex qubits: braids, flying-qubit entanglement, collision phases."""

__version__ = "0.1.0"
