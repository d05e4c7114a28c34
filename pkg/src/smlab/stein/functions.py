"""
Test functions h for the Stein equation.

Piecewise-linear functions are the workhorse: h′ is piecewise constant,
defined a.e., and taken as 0 at the kinks.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from ..errors import InvalidParams

LIPSCHITZ_PAIRS = 256


@dataclass(frozen=True)
class TestFunction:
    """A Lipschitz test function with its a.e. derivative."""

    __test__ = False  # keep pytest from collecting this class

    h: Callable[[np.ndarray], np.ndarray]
    h_prime: Callable[[np.ndarray], np.ndarray]
    lipschitz_const: float
    sup_norm: Optional[float] = None
    kinks: Tuple[float, ...] = field(default_factory=tuple)
    name: str = "h"

    @property
    def derivative_sup(self) -> float:
        """‖h′‖_∞; equals the Lipschitz constant for the functions built here."""
        return self.lipschitz_const

    def spot_check(self, rng: np.random.Generator, scale: float = 5.0) -> bool:
        """Check |h(x) − h(y)| ≤ L|x − y| on random pairs."""
        x = rng.uniform(-scale, scale, LIPSCHITZ_PAIRS)
        y = rng.uniform(-scale, scale, LIPSCHITZ_PAIRS)
        lhs = np.abs(self.h(x) - self.h(y))
        return bool(np.all(lhs <= self.lipschitz_const * np.abs(x - y) * (1 + 1e-12) + 1e-14))


def piecewise_linear(
    knots: Sequence[float],
    values: Sequence[float],
    left_slope: float = 0.0,
    right_slope: float = 0.0,
    name: str = "piecewise_linear",
) -> TestFunction:
    """
    Continuous piecewise-linear function through (knots, values),
    extended linearly with the given tail slopes.
    """
    xk = np.asarray(knots, dtype=float)
    yk = np.asarray(values, dtype=float)
    if xk.ndim != 1 or xk.size < 2 or xk.size != yk.size or np.any(np.diff(xk) <= 0):
        raise InvalidParams("piecewise_linear needs at least two strictly increasing knots with matching values")
    inner = np.diff(yk) / np.diff(xk)
    slopes = np.concatenate([[left_slope], inner, [right_slope]])

    def h(x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, xk, yk)
        out = np.where(x < xk[0], yk[0] + left_slope * (x - xk[0]), out)
        return np.where(x > xk[-1], yk[-1] + right_slope * (x - xk[-1]), out)

    def h_prime(x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(xk, x, side="right")
        out = slopes[idx]
        return np.where(np.isin(x, xk), 0.0, out)

    sup = None
    if left_slope == 0.0 and right_slope == 0.0:
        sup = float(np.max(np.abs(yk)))
    return TestFunction(
        h=h,
        h_prime=h_prime,
        lipschitz_const=float(np.max(np.abs(slopes))),
        sup_norm=sup,
        kinks=tuple(float(k) for k in xk),
        name=name,
    )


def identity() -> TestFunction:
    return TestFunction(
        h=lambda x: np.asarray(x, dtype=float),
        h_prime=lambda x: np.ones(np.shape(x)),
        lipschitz_const=1.0,
        name="identity",
    )


def sine() -> TestFunction:
    return TestFunction(h=np.sin, h_prime=np.cos, lipschitz_const=1.0, sup_norm=1.0, name="sin")


def clip(level: float = 1.0) -> TestFunction:
    """min(level, max(−level, x))."""
    return piecewise_linear([-level, level], [-level, level], name=f"clip({level:g})")


def smoothed_indicator(threshold: float = 0.0, width: float = 0.1) -> TestFunction:
    """Linear ramp from 1 (x ≤ threshold − width) to 0 (x ≥ threshold + width)."""
    return piecewise_linear(
        [threshold - width, threshold + width], [1.0, 0.0], name=f"ramp({threshold:g},{width:g})"
    )


def random_family(
    rng: np.random.Generator,
    n: int,
    family: str = "W",
    scale: float = 1.0,
    n_knots: int = 6,
) -> Sequence[TestFunction]:
    """
    Random piecewise-linear test functions.

    "W": slopes uniform in [−1, 1] everywhere (‖h‖_L ≤ 1), tails included.
    "FM": flat tails, then rescaled so that ‖h‖_L + ‖h‖_∞ ≤ 1.
    """
    if family not in ("W", "FM"):
        raise InvalidParams(f"unknown test-function family '{family}' (expected W or FM)")
    out = []
    for i in range(n):
        knots = np.sort(rng.uniform(-3.0 * scale, 3.0 * scale, n_knots))
        gaps = np.diff(knots)
        if family == "W":
            slopes = rng.uniform(-1.0, 1.0, n_knots - 1)
            values = np.concatenate([[rng.uniform(-1.0, 1.0)], np.cumsum(slopes * gaps)])
            values[1:] += values[0]
            tails = rng.uniform(-1.0, 1.0, 2)
            out.append(piecewise_linear(knots, values, tails[0], tails[1], name=f"W[{i}]"))
        else:
            values = rng.uniform(-1.0, 1.0, n_knots)
            slopes = np.diff(values) / gaps
            norm = float(np.max(np.abs(slopes)) + np.max(np.abs(values)))
            out.append(piecewise_linear(knots, values / norm, name=f"FM[{i}]"))
    return out
