"""Bubble decomposition solver for the cubic NLS in a harmonic trap."""
