"""Reduction of perturbed Schroedinger equations near a turning point to
canonical form, in truncated Gevrey series."""

__version__ = "0.1.0"
