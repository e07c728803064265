"""Exact Fourier coefficients of theta quotients, their lattice and partial-theta forms,
high-precision numerical oracles, and quantum modular values of weight 3/2 partial thetas."""

__version__ = "0.1.0"
