"""Exchangeable cause-effect pair benchmarks, direction scorers and an image classifier."""

__version__ = "0.1.0"
