"""Experiment harness: baselines, full-grid evaluation, sweeps and plot-ready artifacts."""
