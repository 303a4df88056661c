"""Dissipative quantum neural networks simulated with matrix product states."""

__version__ = "0.1.0"
