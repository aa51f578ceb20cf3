"""Desk-scale workbench for cost landscapes and gradient statistics of
variational compiling against scrambling unitaries."""

__version__ = "0.1.0"
