"""Numerical dynamics of complex Hénon maps near the degenerate limit: escape
functions, the primary critical locus, the leafwise cocycle and its deck group."""

__version__ = "0.1.0"
