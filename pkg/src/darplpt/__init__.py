"""Exact solvers for dial-a-ride with limited pickups per trip."""

__version__ = "0.1.0"
