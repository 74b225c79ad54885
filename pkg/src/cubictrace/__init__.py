"""Numerical verification toolkit for Petersson and Kuznetsov trace formulas of level N^3."""

__version__ = "0.1.0"
