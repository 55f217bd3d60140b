"""Flip operations on quadrilateral and hexahedral meshes."""

__version__ = "0.1.0"
