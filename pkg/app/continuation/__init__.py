"""Steady states, continuation in chi and weakly-nonlinear coefficients."""
