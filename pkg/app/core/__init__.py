"""Core parameters, kinetics, errors and logging helpers."""
