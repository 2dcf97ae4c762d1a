"""Numerical spectral geometry: finite spectral triples, Dixmier traces,
spectral and Lorentzian distances, Krein structures and causal orders."""

__version__ = "0.1.0"
