"""Microscopy images to watertight, physically scaled lithograph STL files."""

__version__ = "0.1.0"
