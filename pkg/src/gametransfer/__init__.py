"""Fully convolutional policy-value networks, self-play training and
cross-game parameter transfer for Hex, line-completion games and Breakthrough."""

__version__ = "0.1.0"
