"""Quantum convolutional neural network toolkit built on exact statevector simulation."""

__version__ = "0.1.0"
