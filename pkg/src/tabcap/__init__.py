"""Table caption generation pipeline for token-annotated scholarly pages."""

__version__ = "0.1.0"
