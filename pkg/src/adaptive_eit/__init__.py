"""Adaptive finite element reconstruction of piecewise constant conductivities in EIT."""
