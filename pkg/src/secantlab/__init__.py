"""Dynamics of the secant map near a critical three-cycle and its planar model."""
