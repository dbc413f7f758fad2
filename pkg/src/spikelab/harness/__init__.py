"""Scenario configs, Monte Carlo runs, and the command-line interface."""
