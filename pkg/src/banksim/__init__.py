"""Deterministic double-entry simulator of fractional-reserve banking."""

__version__ = "0.1.0"
