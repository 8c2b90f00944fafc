"""Retrieval-augmented question answering over laboratory protocol corpora."""

__version__ = "0.1.0"
