"""Grid, discrete operators and time integration of the full system."""
