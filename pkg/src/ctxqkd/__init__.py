"""Contextuality-based semi-device-independent QKD: witness, simulation and security analysis."""

__version__ = "0.1.0"
