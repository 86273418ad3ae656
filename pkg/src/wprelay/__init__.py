"""Robust throughput maximization for wireless-powered multi-relay networks."""

__version__ = "0.1.0"
