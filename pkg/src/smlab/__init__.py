"""
smlab

Numerical laboratory for Stein's method and Malliavin calculus: reference
laws, Stein solvers, Wiener and Wiener-Poisson chaos, distance bounds and
fractional Gaussian noise experiments.
"""

__version__ = "0.1.0"
