"""
Stein equation solvers and derivative-bound sweeps.
"""

from .functions import (
    TestFunction,
    clip,
    identity,
    piecewise_linear,
    random_family,
    sine,
    smoothed_indicator,
)
from .solver import (
    SteinSolution,
    ab_coefficients,
    f_prime_repr,
    f_second_repr,
    mean_h,
    sign_property,
    solve,
)
from .bounds import bound_constant, bound_stability

__all__ = [
    "SteinSolution",
    "TestFunction",
    "ab_coefficients",
    "bound_constant",
    "bound_stability",
    "clip",
    "f_prime_repr",
    "f_second_repr",
    "identity",
    "mean_h",
    "piecewise_linear",
    "random_family",
    "sign_property",
    "sine",
    "smoothed_indicator",
    "solve",
]
