"""
Guarded numerical integration.

All quadrature in smlab goes through integrate() so that a poor error
estimate surfaces as QuadratureFailure instead of a silent warning.
"""

import logging
import math
import warnings
from typing import Callable, Iterable, List, Optional

import numpy as np
from scipy import integrate as sp_integrate

from .errors import QuadratureFailure

logger = logging.getLogger(__name__)

EPSREL = 1e-10
EPSABS = 1e-13
# Accepted error estimate: relative to the value, with an absolute floor.
ACCEPT_REL = 1e-6
ACCEPT_ABS = 1e-9


def _split(a: float, b: float, points: Optional[Iterable[float]]) -> List[float]:
    edges = [a]
    if points is not None:
        edges.extend(sorted(p for p in set(points) if a < p < b))
    edges.append(b)
    return edges


def integrate(
    func: Callable[[float], float],
    a: float,
    b: float,
    points: Optional[Iterable[float]] = None,
    epsrel: float = EPSREL,
    epsabs: float = EPSABS,
    limit: int = 200,
    what: str = "integral",
) -> float:
    """
    Integrate func over (a, b) with scipy's adaptive QUADPACK routines.

    Infinite bounds are allowed; QUADPACK maps them to (0, 1]. The
    interval is split at the given breakpoints (kinks of the integrand)
    and each piece integrated separately.

    Args:
        func: Scalar integrand
        a: Lower bound (may be -inf)
        b: Upper bound (may be +inf)
        points: Optional breakpoints inside (a, b)
        epsrel: Relative tolerance requested from QUADPACK
        epsabs: Absolute tolerance requested from QUADPACK; 0 also drops
            the absolute floor of the acceptance test (tail integrals)
        limit: Maximum number of subintervals per piece
        what: Label used in error messages

    Returns:
        Value of the integral

    Raises:
        QuadratureFailure: If the result is not finite or the error
            estimate exceeds the accepted tolerance
    """
    if a == b:
        return 0.0
    if a > b:
        return -integrate(func, b, a, points, epsrel, epsabs, limit, what)

    total = 0.0
    total_err = 0.0
    edges = _split(a, b, points)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sp_integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            value, err = sp_integrate.quad(
                func, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=limit
            )
            total += value
            total_err += err

    if not math.isfinite(total) or not math.isfinite(total_err):
        raise QuadratureFailure(f"{what}: non-finite result on ({a}, {b})")
    floor = ACCEPT_ABS if epsabs > 0 else 0.0
    if total_err > max(ACCEPT_REL * abs(total), floor):
        raise QuadratureFailure(
            f"{what}: error estimate {total_err:.3e} too large for value {total:.6e} on ({a}, {b})"
        )
    logger.debug("%s on (%s, %s) = %.12g (err %.2e)", what, a, b, total, total_err)
    return total


def geometric_approach(start: float, endpoint: float, steps: int, factor: float = 2.0) -> np.ndarray:
    """
    Points approaching an endpoint geometrically.

    For a finite endpoint the gap to it shrinks by `factor` per step; for
    an infinite endpoint the distance from `start` grows by `factor`.
    """
    k = np.arange(1, steps + 1, dtype=float)
    if math.isinf(endpoint):
        sign = 1.0 if endpoint > 0 else -1.0
        scale = max(abs(start), 1.0)
        return start + sign * scale * factor ** k
    gap = endpoint - start
    return endpoint - gap * factor ** (-k)
