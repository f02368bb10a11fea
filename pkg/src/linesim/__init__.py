"""linesim: deterministic multi-modal mobility simulator for a linear city."""

__version__ = "0.1.0"
