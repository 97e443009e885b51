"""Shadow system, its bifurcations and transition layers."""
