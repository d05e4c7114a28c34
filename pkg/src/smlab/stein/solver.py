"""
Stein equation solver.

For a law with kernel g* and a Lipschitz test function h the Stein
equation g*(x)f′(x) − xf(x) = h(x) − E[h(Z)] has the solution

    f(x) = −[(1 − Φ(x)) A_l(x) + Φ(x) A_u(x)] / (g*(x) ρ*(x)),

with A_l(x) = ∫_l^x Φ h′ and A_u(x) = ∫_x^u (1 − Φ) h′. Since
h(x) − E[h(Z)] = A_l(x) − A_u(x), the derivatives follow from the same
two integrals.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from ..errors import UnstableDenominator, UnsupportedSupport
from ..laws.catalog import ReferenceLaw, require_in_support
from ..numerics import integrate
from ..reports import write_csv
from .functions import TestFunction

logger = logging.getLogger(__name__)

DENOM_FLOOR = 1e-300
SIGN_RTOL = 1e-9

GridSpec = Union[int, Sequence[float], Dict[str, Any], None]


@dataclass
class SteinSolution:
    """Grid-sampled solution of the Stein equation for one (law, h) pair."""

    grid: np.ndarray
    f: np.ndarray
    f_prime: np.ndarray
    f_second: np.ndarray
    residual: np.ndarray
    m_h: float
    law_id: str
    h_id: str
    flagged: List[int] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residual))

    def export_csv(self, path: str) -> str:
        rows = zip(self.grid, self.f, self.f_prime, self.f_second, self.residual)
        return write_csv(Path(path), ["z", "f", "f_prime", "f_second", "residual"], rows)


def _resolve_grid(law: ReferenceLaw, grid_spec: GridSpec) -> np.ndarray:
    if grid_spec is None:
        return law.interior_grid(200)
    if isinstance(grid_spec, int):
        return law.interior_grid(grid_spec)
    if isinstance(grid_spec, dict):
        return law.interior_grid(int(grid_spec.get("n", 200)))
    grid = np.asarray(grid_spec, dtype=float)
    for x in grid:
        require_in_support(law, float(x))
    return np.sort(grid)


def _kinks(law: ReferenceLaw, h: TestFunction) -> List[float]:
    return sorted(set(h.kinks) | set(law.breakpoints))


def mean_h(law: ReferenceLaw, h: TestFunction) -> float:
    """m_h = E[h(Z)]."""
    return integrate(
        lambda y: float(h.h(y)) * float(law.density(y)),
        law.support.lower,
        law.support.upper,
        points=_kinks(law, h),
        what=f"E[h(Z)] for {h.name}",
    )


def _left_weight(law: ReferenceLaw, h: TestFunction):
    return lambda t: float(law.cdf(t)) * float(h.h_prime(t))


def _right_weight(law: ReferenceLaw, h: TestFunction):
    return lambda t: float(law.sf(t)) * float(h.h_prime(t))


def boundary_integrals(law: ReferenceLaw, h: TestFunction, grid: np.ndarray) -> Dict[str, np.ndarray]:
    """
    A_l and A_u on a sorted grid, accumulated segment by segment.

    Returns:
        Dict with arrays "A_l" and "A_u" aligned with grid
    """
    kinks = _kinks(law, h)
    edges = np.concatenate([[law.support.lower], grid, [law.support.upper]])
    left_w = _left_weight(law, h)
    right_w = _right_weight(law, h)
    left_seg = np.empty(len(edges) - 1)
    right_seg = np.empty(len(edges) - 1)
    for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        left_seg[i] = integrate(left_w, a, b, points=kinks, what="∫Φh′")
        right_seg[i] = integrate(right_w, a, b, points=kinks, what="∫(1−Φ)h′")
    A_l = np.cumsum(left_seg)[:-1]
    A_u = np.cumsum(right_seg[::-1])[::-1][1:]
    return {"A_l": A_l, "A_u": A_u}


def _quadratic_form(law: ReferenceLaw, x: np.ndarray) -> Dict[str, np.ndarray]:
    g = law.gstar(x)
    rho = law.density(x)
    gp = law.gstar_prime(x)
    return {
        "g": g,
        "rho": rho,
        "gp": gp,
        "grho": g * rho,
        "Phi": law.cdf(x),
        "Psi": law.sf(x),
        "q": x * x - x * gp + g,
    }


def ab_coefficients(law: ReferenceLaw, x) -> Dict[str, np.ndarray]:
    """
    The coefficients of the second-derivative representation:

        A(x) = g*ρ*(x − g*′) − (x² − xg*′ + g*)(1 − Φ),
        B(x) = g*ρ*(g*′ − x) − (x² − xg*′ + g*)Φ.

    Both are ≤ 0 for full-line laws satisfying the B′ conditions.
    """
    x = np.asarray(x, dtype=float)
    t = _quadratic_form(law, x)
    A = t["grho"] * (x - t["gp"]) - t["q"] * t["Psi"]
    B = t["grho"] * (t["gp"] - x) - t["q"] * t["Phi"]
    scale_A = np.abs(t["grho"] * (x - t["gp"])) + np.abs(t["q"] * t["Psi"])
    scale_B = np.abs(t["grho"] * (t["gp"] - x)) + np.abs(t["q"] * t["Phi"])
    return {"A": A, "B": B, "scale_A": scale_A, "scale_B": scale_B}


def sign_property(law: ReferenceLaw, grid: Optional[np.ndarray] = None) -> Dict[str, Any]:
    """Check A(x) ≤ 0 and B(x) ≤ 0 on a grid, up to rounding."""
    if not law.support.full_line:
        raise UnsupportedSupport(f"{law.law_id}: A/B coefficients need support (-inf, inf)")
    x = law.interior_grid(200) if grid is None else np.asarray(grid, dtype=float)
    ab = ab_coefficients(law, x)
    a_ok = ab["A"] <= SIGN_RTOL * ab["scale_A"]
    b_ok = ab["B"] <= SIGN_RTOL * ab["scale_B"]
    return {
        "ok": bool(np.all(a_ok) and np.all(b_ok)),
        "max_A": float(np.max(ab["A"])),
        "max_B": float(np.max(ab["B"])),
        "violations": [float(v) for v in x[~(a_ok & b_ok)]],
    }


def solve(law: ReferenceLaw, h: TestFunction, grid_spec: GridSpec = None) -> SteinSolution:
    """
    Solve the Stein equation on a grid.

    f uses the two-sided Φ / (1 − Φ) form, with 1 − Φ taken from the
    survival function so the right tail keeps full precision. f′ and
    f″ follow from A_l, A_u; f″ is only defined for full-line supports
    and is NaN otherwise.

    Args:
        law: Target law
        h: Test function
        grid_spec: Number of interior points, {"n": ...}, or explicit points

    Returns:
        SteinSolution with f, f′, f″ and the Stein residual

    Raises:
        QuadratureFailure: If any integral fails
        UnstableDenominator: If g*ρ* underflows at every grid point
    """
    grid = _resolve_grid(law, grid_spec)
    m_h = mean_h(law, h)
    ints = boundary_integrals(law, h, grid)
    A_l, A_u = ints["A_l"], ints["A_u"]
    t = _quadratic_form(law, grid)

    stable = t["grho"] > DENOM_FLOOR
    if not np.any(stable):
        raise UnstableDenominator(f"g*·rho underflows on the whole grid for {law.law_id}")
    numerator = -(t["Psi"] * A_l + t["Phi"] * A_u)
    f = np.where(stable, numerator / np.where(stable, t["grho"], 1.0), np.nan)
    flagged = [int(i) for i in np.flatnonzero(~stable)]
    if flagged:
        # carry the nearest stable value into the unstable ends
        idx = np.arange(len(grid))
        good = idx[stable]
        nearest = good[np.clip(np.searchsorted(good, idx), 0, len(good) - 1)]
        f = f[nearest]
        logger.warning("%s/%s: %d grid points with g*rho < %g", law.law_id, h.name, len(flagged), DENOM_FLOOR)

    h_centered = h.h(grid) - m_h
    f_prime = (A_l - A_u + grid * f) / t["g"]
    residual = np.abs(t["g"] * f_prime - grid * f - h_centered)

    if law.support.full_line:
        ab = ab_coefficients(law, grid)
        hp = h.h_prime(grid)
        f_second = (ab["A"] * A_l + ab["B"] * A_u + t["g"] ** 2 * t["rho"] * hp) / (t["g"] ** 3 * t["rho"])
    else:
        f_second = np.full(grid.shape, np.nan)

    return SteinSolution(
        grid=grid,
        f=f,
        f_prime=f_prime,
        f_second=f_second,
        residual=residual,
        m_h=m_h,
        law_id=law.law_id,
        h_id=h.name,
        flagged=flagged,
    )


def _point_integrals(law: ReferenceLaw, h: TestFunction, x: float) -> Dict[str, float]:
    kinks = _kinks(law, h)
    return {
        "A_l": integrate(_left_weight(law, h), law.support.lower, x, points=kinks, what="∫Φh′"),
        "A_u": integrate(_right_weight(law, h), x, law.support.upper, points=kinks, what="∫(1−Φ)h′"),
    }


def f_prime_repr(law: ReferenceLaw, h: TestFunction, x: float) -> float:
    """
    f′(x) from the double-integral representation

        f′(x) = (1/(g*²ρ*)) ∫_x^u ∫_l^x (1 − Φ(s)) Φ(t) [h′(t) − h′(s)] dt ds.

    The integrand separates, and with ∫_l^x Φ = xΦ + g*ρ* and
    ∫_x^u (1 − Φ) = g*ρ* − x(1 − Φ) the double integral reduces to
    [(g*ρ* − x(1−Φ)) A_l − (xΦ + g*ρ*) A_u] / (g*²ρ*).

    Raises:
        DomainError: If x is outside the support
        QuadratureFailure: If quadrature does not converge
    """
    require_in_support(law, x)
    t = _quadratic_form(law, np.asarray(x, dtype=float))
    ints = _point_integrals(law, h, x)
    grho = float(t["grho"])
    if grho <= DENOM_FLOOR:
        raise UnstableDenominator(f"g*·rho = {grho} at x={x}")
    upper_mass = grho - x * float(t["Psi"])
    lower_mass = x * float(t["Phi"]) + grho
    return (upper_mass * ints["A_l"] - lower_mass * ints["A_u"]) / (float(t["g"]) * grho)


def f_second_repr(law: ReferenceLaw, h: TestFunction, x: float) -> float:
    """
    f″(x) = (A(x)∫_l^x Φh′ + B(x)∫_x^u (1−Φ)h′ + g*²ρ* h′(x)) / (g*³ρ*).

    Raises:
        UnsupportedSupport: If the law's support is not the full line
    """
    if not law.support.full_line:
        raise UnsupportedSupport(
            f"{law.law_id}: second-derivative representation needs support (-inf, inf)"
        )
    t = _quadratic_form(law, np.asarray(x, dtype=float))
    ab = ab_coefficients(law, x)
    ints = _point_integrals(law, h, x)
    g, rho = float(t["g"]), float(t["rho"])
    if g * rho <= DENOM_FLOOR:
        raise UnstableDenominator(f"g*·rho = {g * rho} at x={x}")
    num = float(ab["A"]) * ints["A_l"] + float(ab["B"]) * ints["A_u"] + g * g * rho * float(h.h_prime(x))
    return num / (g ** 3 * rho)
