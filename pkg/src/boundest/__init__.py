"""Learned objective-boundary estimation for constraint optimization problems."""

__version__ = "0.1.0"
