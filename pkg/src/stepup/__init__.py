"""Planar wheeled-biped step climbing: simulation, training, evaluation."""

__version__ = "0.1.0"
