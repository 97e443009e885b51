"""Run configuration, orchestration and output files."""
