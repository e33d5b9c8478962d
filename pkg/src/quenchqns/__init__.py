"""Quench phase shift and dephasing of a sensor qubit in a Gaussian bath."""
__version__ = "0.1.0"
