"""Ranking-and-selection toolkit: OCBA sampling policies, their regret-optimal variants,
theoretical allocations and rate constants, and a Monte Carlo replication harness."""

__version__ = "0.1.0"
