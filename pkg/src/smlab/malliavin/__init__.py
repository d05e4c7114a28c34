"""
Numeric Malliavin calculus for smooth functionals of a Gaussian vector:
the Mehler realization of −DL⁻¹, paired (X, ⟨DX, −DL⁻¹X⟩) draws and
regression estimates of g_X.
"""

from .functional import (
    GammaSamples,
    SmoothFunctional,
    absolute_value,
    finite_difference_gradient,
    from_chaos,
    gamma_draw,
    hermite_coordinate,
    linear,
    minus_DL_inv,
    random_cubic,
)
from .regression import RegressionResult, conditional_regress

__all__ = [
    "GammaSamples",
    "RegressionResult",
    "SmoothFunctional",
    "absolute_value",
    "conditional_regress",
    "finite_difference_gradient",
    "from_chaos",
    "gamma_draw",
    "hermite_coordinate",
    "linear",
    "minus_DL_inv",
    "random_cubic",
]
