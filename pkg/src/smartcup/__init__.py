"""Simulation and learning toolkit for a four-chamber smart suction cup."""

__version__ = "0.1.0"
