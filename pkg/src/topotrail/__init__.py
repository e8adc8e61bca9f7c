"""Topological signatures of movement trajectories."""

__version__ = "0.1.0"
