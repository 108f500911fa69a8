"""Quantum/classical fiber coexistence: Raman noise, pair rates, tomography, planning."""
__version__ = "0.1.0"
