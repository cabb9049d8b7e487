"""Bug severity ranking from bug texts and the bug-bug co-affection graph."""

__version__ = "0.1.0"
