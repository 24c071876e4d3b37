"""Lattice wildfire simulation, corpus generation and rollout evaluation."""

__version__ = "0.1.0"
