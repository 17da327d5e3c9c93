"""Pseudo-spectral approximation scheme for the stochastic Navier-Stokes system."""

__version__ = "0.1.0"
