"""
g* calculus: the density ↔ g* inversion formulas, the growth test for
∫ y/g*(y) dy near the ends of the support, and the regularity audit
(Assumptions A, B and B′) used before solving Stein equations.
"""

import logging
import math
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np

from ..errors import DomainError, Inconclusive, NonFiniteDensity
from ..numerics import geometric_approach, integrate
from .catalog import ReferenceLaw, Support

logger = logging.getLogger(__name__)

GROWTH_STEPS = 40
GROWTH_FACTOR = 2.0
GROWTH_LIMIT = 1e3
# Ratio of successive truncated-integral increments: ≥ DIVERGE_RATIO
# means the increments do not shrink (at best logarithmic divergence).
DIVERGE_RATIO = 0.995
CONVERGE_RATIO = 0.98


def gstar_from_density(
    density: Callable[[float], float],
    support: Support,
    z: float,
    breakpoints: Sequence[float] = (),
) -> float:
    """
    Recover g*(z) = ∫_z^u y ρ*(y) dy / ρ*(z) by quadrature.

    For z < 0 the equivalent left form −∫_l^z y ρ*(y) dy / ρ*(z) is used
    (equal by the zero mean); each side integrates toward the nearer end,
    which avoids cancellation in the tails.

    Raises:
        DomainError: If z is outside the support
        NonFiniteDensity: If ρ*(z) underflows or is not finite
        QuadratureFailure: If quadrature does not converge
    """
    if not support.contains(z):
        raise DomainError(f"z={z} outside support ({support.lower}, {support.upper})")
    rho = float(density(z))
    if not math.isfinite(rho) or rho <= 0.0:
        raise NonFiniteDensity(f"density at interior point z={z} is {rho}")

    def _integrand(y):
        return y * float(density(y))

    if z < 0.0:
        tail = -integrate(_integrand, support.lower, z, points=breakpoints, epsabs=0.0, what="left y*rho")
    else:
        tail = integrate(_integrand, z, support.upper, points=breakpoints, epsabs=0.0, what="right y*rho")
    return tail / rho


def gstar_two_sided(
    density: Callable[[float], float],
    support: Support,
    z: float,
    breakpoints: Sequence[float] = (),
) -> Dict[str, float]:
    """Both representations of g*(z); they agree when the mean is zero."""
    rho = float(density(z))

    def _integrand(y):
        return y * float(density(y))

    right = integrate(_integrand, z, support.upper, points=breakpoints, epsabs=0.0, what="right y*rho")
    left = -integrate(_integrand, support.lower, z, points=breakpoints, epsabs=0.0, what="left y*rho")
    return {"right": right / rho, "left": left / rho}


def density_from_gstar(
    gstar: Callable[[float], float],
    abs_mean: float,
    z: float,
    support: Optional[Support] = None,
    breakpoints: Sequence[float] = (),
) -> float:
    """
    ρ*(z) = E|Z| / (2g*(z)) · exp(−∫₀^z y/g*(y) dy).

    Raises:
        DomainError: If z is outside the support (when one is given)
        QuadratureFailure: If quadrature does not converge
    """
    if support is not None and not support.contains(z):
        raise DomainError(f"z={z} outside support ({support.lower}, {support.upper})")
    g_z = float(gstar(z))
    if g_z <= 0.0:
        raise DomainError(f"g*({z}) = {g_z} is not positive")
    exponent = integrate(lambda y: y / float(gstar(y)), 0.0, z, points=breakpoints, what="y/g*")
    return abs_mean / (2.0 * g_z) * math.exp(-exponent)


def _side_divergence(gstar: Callable[[float], float], endpoint: float) -> Dict[str, Any]:
    """Follow ∫₀^z y/g*(y) dy as z approaches one end geometrically."""
    points = geometric_approach(0.0, endpoint, GROWTH_STEPS, GROWTH_FACTOR)
    total = 0.0
    increments = []
    previous = 0.0
    for z in points:
        inc = integrate(lambda y: y / float(gstar(y)), previous, float(z), what="growth increment")
        increments.append(abs(inc))
        total += inc
        previous = float(z)
        if abs(total) > GROWTH_LIMIT:
            return {"diverges": True, "truncated": total, "ratio": None, "steps": len(increments)}

    tail = np.asarray(increments[-6:])
    ratios = tail[1:] / np.where(tail[:-1] > 0, tail[:-1], np.nan)
    ratio = float(np.nanmedian(ratios)) if np.any(np.isfinite(ratios)) else 0.0
    if ratio >= DIVERGE_RATIO:
        diverges: Optional[bool] = True
    elif ratio <= CONVERGE_RATIO:
        diverges = False
    else:
        diverges = None
    return {"diverges": diverges, "truncated": total, "ratio": ratio, "steps": len(increments)}


def check_growth(gstar: Callable[[float], float], support: Support) -> Dict[str, Any]:
    """
    Test ∫_l^0 y/g*(y) dy = −∞ and ∫_0^u y/g*(y) dy = +∞.

    The truncation point approaches each end geometrically (factor 2,
    40 steps). A side diverges if the truncated integral passes 10³ in
    magnitude, or if successive increments stop shrinking (ratio
    ≥ 0.995, the logarithmic case). It converges if the increments
    shrink geometrically (ratio ≤ 0.98).

    Returns:
        Dict with left_ok, right_ok and per-side divergence_estimates

    Raises:
        Inconclusive: If a side neither converges nor diverges
    """
    left = _side_divergence(gstar, support.lower)
    right = _side_divergence(gstar, support.upper)
    for side, diag in (("left", left), ("right", right)):
        if diag["diverges"] is None:
            raise Inconclusive(
                f"growth test {side} end: increment ratio {diag['ratio']:.4f} "
                f"after {diag['steps']} steps (truncated {diag['truncated']:.4g})"
            )
    return {
        "left_ok": bool(left["diverges"]),
        "right_ok": bool(right["diverges"]),
        "divergence_estimates": {"left": left, "right": right},
    }


# -- Assumption audit -------------------------------------------------------

AUDIT_STEPS = 24
RATIO_BOUND = 1e6
DERIV_RTOL = 1e-3


def _check_A(law: ReferenceLaw, grid: np.ndarray) -> Dict[str, Any]:
    lo, hi = law.support.lower, law.support.upper
    pts = law.breakpoints
    mass = integrate(lambda y: float(law.density(y)), lo, hi, points=pts, what="mass")
    mean = integrate(lambda y: y * float(law.density(y)), lo, hi, points=pts, what="mean")
    second = integrate(lambda y: y * y * float(law.density(y)), lo, hi, points=pts, what="second moment")
    g = law.gstar(grid)
    witnesses = {
        "mass": mass,
        "mean": mean,
        "variance": second,
        "min_gstar": float(np.min(g)),
        "max_density": float(np.max(law.density(grid))),
    }
    scale = math.sqrt(second) if math.isfinite(second) else 1.0
    ok = (
        abs(mass - 1.0) < 1e-6
        and abs(mean) < 1e-6 * max(1.0, scale)
        and math.isfinite(second)
        and bool(np.all(g > 0.0))
        and math.isfinite(witnesses["max_density"])
    )
    return {"ok": ok, "witnesses": witnesses}


def _check_end(law: ReferenceLaw, endpoint: float) -> Dict[str, Any]:
    """One end of Assumption B: g*/g̃ bounded above and away from 0, g̃′ has a limit."""
    smooth, smooth_prime = law.smoothing()
    start = law.ppf(0.5)
    if not law.support.contains(start):
        start = 0.0
    points = geometric_approach(start, endpoint, AUDIT_STEPS)
    points = points[law.support.mask(points)]
    g = law.gstar(points)
    gt = np.asarray(smooth(points), dtype=float)
    ratio = g / gt
    ratio_ok = bool(np.all(np.isfinite(ratio)) and np.min(ratio) > 1.0 / RATIO_BOUND and np.max(ratio) < RATIO_BOUND)

    d = np.asarray(smooth_prime(points), dtype=float)
    steps = np.abs(np.diff(d[-6:]))
    settled = bool(
        np.all(steps[-3:] <= DERIV_RTOL * (1.0 + np.abs(d[-3:])))
        or np.all(np.diff(steps) < 0)
    )
    # limit ±∞ is allowed
    runaway = bool(np.all(np.diff(np.abs(d[-6:])) > 0) and abs(d[-1]) >= 10.0 * abs(d[-6]))
    deriv_ok = settled or runaway

    result = {
        "ratio_min": float(np.min(ratio)),
        "ratio_max": float(np.max(ratio)),
        "derivative_limit": float(d[-1]),
        "derivative_settled": settled or runaway,
    }
    ok = ratio_ok and deriv_ok
    if math.isinf(endpoint):
        liminf = float(np.min(g[-6:]))
        result["liminf_gstar"] = liminf
        ok = ok and liminf > 1e-8
    result["ok"] = ok
    return result


def _check_Bprime(law: ReferenceLaw, grid: np.ndarray) -> Dict[str, Any]:
    second = law.gstar_second(grid)
    far = np.concatenate([-np.geomspace(1e6, 1.0, AUDIT_STEPS), np.geomspace(1.0, 1e6, AUDIT_STEPS)])
    gp = law.gstar_prime(far)
    denom = far * far - far * gp + law.gstar(far)
    ratio = np.abs(far - gp) / denom
    # tails: the outermost values must not exceed the ones nearer the origin
    left_tail, right_tail = ratio[:6], ratio[-6:]
    bounded = bool(
        np.all(denom > 0)
        and np.all(np.isfinite(ratio))
        and np.max(left_tail) <= np.max(ratio[AUDIT_STEPS - 6 : AUDIT_STEPS]) * (1 + 1e-9) + 1e-12
        and np.max(right_tail) <= np.max(ratio[AUDIT_STEPS : AUDIT_STEPS + 6]) * (1 + 1e-9) + 1e-12
    )
    return {
        "ok": bool(np.all(second < 2.0)) and bounded,
        "max_gstar_second": float(np.max(second)),
        "tail_ratio_max": float(np.max(ratio)),
        "tail_ratio_bounded": bounded,
    }


def check_assumptions(law: ReferenceLaw, n: int = 200) -> Dict[str, Any]:
    """
    Audit Assumption A (density, zero mean, positive g*, finite
    variance), Assumption B (g*/g̃ bounded at both ends, g̃′ has limits,
    g* bounded away from 0 at infinite ends) and, for full-line laws
    only, Assumption B′ (g*″ < 2 and |x − g*′|/(x² − xg*′ + g*) bounded
    at ±∞).

    Returns:
        Dict with A, B, Bprime (None unless the support is the full
        line) and witnesses per sub-condition
    """
    grid = law.interior_grid(n)
    a = _check_A(law, grid)
    left = _check_end(law, law.support.lower)
    right = _check_end(law, law.support.upper)
    report: Dict[str, Any] = {
        "A": a["ok"],
        "B": left["ok"] and right["ok"],
        "Bprime": None,
        "witnesses": {"A": a["witnesses"], "B_left": left, "B_right": right},
    }
    if law.support.full_line:
        bp = _check_Bprime(law, grid)
        report["Bprime"] = bp["ok"]
        report["witnesses"]["Bprime"] = bp
    logger.info("Assumptions for %s: A=%s B=%s B'=%s", law.law_id, report["A"], report["B"], report["Bprime"])
    return report
