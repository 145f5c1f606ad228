"""Simulation and analysis of an energy-harvesting full-duplex amplify-and-forward relay link."""

__version__ = "0.1.0"
