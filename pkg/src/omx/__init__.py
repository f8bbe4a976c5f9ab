"""Optomechanical coupling classification and ring-cavity cooling toolkit."""

__version__ = "0.1.0"
