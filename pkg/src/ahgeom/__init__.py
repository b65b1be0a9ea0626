"""Canonical and Levi-Civita geometry of almost Hermitian structures on charts."""

__version__ = "0.1.0"
