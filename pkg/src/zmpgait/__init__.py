"""Offline walking-pattern generation for legged robots with variable CoM height."""

__version__ = "0.1.0"
