"""Ranking facet-value pairs for keyword queries over structured documents."""

__version__ = "0.1.0"
