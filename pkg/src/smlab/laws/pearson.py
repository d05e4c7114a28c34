"""
Pearson family: laws whose Stein kernel is a quadratic polynomial,
g*(z) = αz² + βz + γ on the support.
"""

from dataclasses import dataclass
from typing import Dict

import numpy as np

from ..errors import InvalidParams, MomentUndefined


@dataclass(frozen=True)
class PearsonParams:
    """Coefficients (α, β, γ) of g*(z) = αz² + βz + γ."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if self.alpha < 1.0 and self.gamma / (1.0 - self.alpha) <= 0.0:
            raise InvalidParams(
                f"Pearson ({self.alpha}, {self.beta}, {self.gamma}): variance gamma/(1-alpha) must be positive"
            )

    @property
    def variance(self) -> float:
        return pearson_moment(self, 2)

    def gstar(self, z):
        z = np.asarray(z, dtype=float)
        return self.alpha * z * z + self.beta * z + self.gamma

    def gstar_prime(self, z):
        z = np.asarray(z, dtype=float)
        return 2.0 * self.alpha * z + self.beta

    def as_tuple(self):
        return (self.alpha, self.beta, self.gamma)


def pearson_moment(params: PearsonParams, r: int) -> float:
    """
    Raw moment E[Z^r] from the Pearson recursion.

    E[Z^(k+1)] = (kβ E[Z^k] + kγ E[Z^(k−1)]) / (1 − kα), seeded with
    E[Z⁰] = 1 and E[Z] = 0.

    Args:
        params: Pearson coefficients
        r: Moment order (r ≥ 0)

    Returns:
        E[Z^r]

    Raises:
        MomentUndefined: If 1 − kα ≤ 0 for some k < r (the moment is infinite)
    """
    if r < 0:
        raise ValueError("moment order must be non-negative")
    moments = [1.0, 0.0]
    for k in range(1, r):
        denom = 1.0 - k * params.alpha
        if denom <= 0.0:
            raise MomentUndefined(
                f"E[Z^{r}] undefined: 1 - {k}*alpha = {denom:.4g} <= 0 for alpha={params.alpha}"
            )
        moments.append((k * params.beta * moments[k] + k * params.gamma * moments[k - 1]) / denom)
    return moments[r]


def pearson_gz_stats(params: PearsonParams) -> Dict[str, float]:
    """
    Closed-form E[g_Z²] and Var g_Z for a Pearson target.

    g_Z = g*(Z), so E[g_Z²] expands into moments up to order four and
    E[g_Z] = E[Z²].

    Raises:
        MomentUndefined: If the fourth moment does not exist
    """
    a, b, c = params.as_tuple()
    m2 = pearson_moment(params, 2)
    m3 = pearson_moment(params, 3)
    m4 = pearson_moment(params, 4)
    e_gz_sq = a * a * m4 + 2.0 * a * b * m3 + (b * b + 2.0 * a * c) * m2 + c * c
    return {"e_gz": m2, "e_gz_sq": e_gz_sq, "var_gz": e_gz_sq - m2 * m2}


def gstar_polynomial_moments(params: PearsonParams) -> Dict[str, float]:
    """
    The Z-side moments of the law characterization: E[g*(Z)²] and
    E[Z·G*(Z)], computed independently from the moment sequence. Both
    equal E[g_Z²].
    """
    a, b, c = params.as_tuple()
    m2 = pearson_moment(params, 2)
    m3 = pearson_moment(params, 3)
    m4 = pearson_moment(params, 4)
    # G*(z) = αz³/3 + βz²/2 + γz + const; the constant drops since E[Z] = 0
    e_z_Gstar = a * m4 / 3.0 + b * m3 / 2.0 + c * m2
    return {
        "e_gstar_sq": pearson_gz_stats(params)["e_gz_sq"],
        "e_z_Gstar": e_z_Gstar,
    }
