"""Finite-volume solvers: 1D scalar (oned), 2D parabolic (parabolic), compressible flow and shallow water (hyperbolic)."""
