"""Computational laboratory for measured solenoids immersed in flat tori."""

__version__ = "0.1.0"
