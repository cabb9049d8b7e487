"""Offline sentence-encoder export to the BGEMB1 embedding file format."""

__version__ = "0.1.0"
