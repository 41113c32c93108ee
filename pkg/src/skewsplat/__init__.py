"""Differentiable tile-based rasterizer and fitting engine for skew-Gaussian primitives."""

__version__ = "0.1.0"
