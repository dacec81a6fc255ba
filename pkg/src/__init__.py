"""opinion_lab: multi-population bounded-confidence opinion dynamics."""

__version__ = "0.1.0"
