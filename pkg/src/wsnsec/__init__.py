"""Secure scheduling and security-game toolkit for wireless sensor networks."""

__version__ = "0.1.0"
