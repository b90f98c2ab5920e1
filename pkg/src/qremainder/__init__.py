"""Scaled remainders of base-q digit expansions."""
__version__ = "0.1.0"
