"""Coherent feed-forward quantum neural networks on a small statevector simulator."""

__version__ = "0.1.0"
