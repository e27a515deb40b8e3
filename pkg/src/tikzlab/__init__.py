"""Corpus construction, compile-repair, and evaluation toolkit for
caption-conditioned TikZ generation."""

__version__ = "0.1.0"
