"""Numerical workbench for asymptotically almost automorphic generalized functions."""
__version__ = "0.1.0"
