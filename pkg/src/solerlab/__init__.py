"""Numerical laboratory for solitary waves of the Soler and Dirac-Klein-Gordon models."""

__version__ = "0.1.0"
