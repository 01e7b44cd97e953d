"""Numerical tolerances shared by every module."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-10
    psd: float = 1e-10
    trace: float = 1e-10
    unit_norm: float = 1e-10
    eig_reconstruction: float = 1e-9
    zero_eigenvalue: float = 1e-9
    probability: float = 1e-9
    # Matrices transcribed with 4 printed decimals.
    transcription: float = 1e-4


TOL = Tolerances()
