"""Rate-distortion solver and optimizer-sensitivity laboratory."""

__version__ = "0.1.0"
