"""Deck reconstruction, Latin-square and GF(2) search tools."""

__version__ = "0.1.0"
