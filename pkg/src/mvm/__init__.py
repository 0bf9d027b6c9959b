"""Manifold matching with a learned pullback metric."""
__version__ = "0.1.0"
