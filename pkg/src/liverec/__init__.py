"""Record how stack frames evolve while an annotated function runs under a debug adapter."""

__version__ = "0.1.0"
