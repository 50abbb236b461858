"""Curvature and twistor-space diagnostics for Riemannian 4-manifolds."""

__version__ = "0.1.0"
