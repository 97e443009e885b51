"""Linear stability of the coexistence state."""
