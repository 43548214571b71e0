"""Viscoelastic palpation: contact laws, simulated phantoms, offline and online estimation."""

__version__ = "0.1.0"
