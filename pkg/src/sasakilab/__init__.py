"""Numerical verification workbench for Sasakian geometry and Sasaki-Ricci solitons."""

__version__ = "0.1.0"
