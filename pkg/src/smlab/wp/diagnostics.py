"""
Wiener-Poisson diagnostics: the jump term of the distance bound, the
fourth-moment ladder with flagged contractions, the third-moment check
with jump correction, and the standard kernel sequences.
"""

import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..chaos.kernels import ChaosVector
from ..errors import InvalidParams
from ..laws.catalog import catalog
from ..npbound.checks import trend_verdict
from ..npbound.distances import wasserstein1_empirical, wasserstein1_floor
from .grid import DEFAULT_WP_CAPS, LevyGrid, WPCaps, WPKernel, contraction_norms_wp, dx_norm_wp, product_expand_wp
from .sampling import sample_wp_with_gradient

logger = logging.getLogger(__name__)

STREAM_WP = 51

# (a_j, λ_j) for the shrinking-atom ladder: x_j = a_j/√n, Poisson mean λ_j per cell
SHRINKING_ATOMS = ((1.0, 16.0), (-1.0, 16.0), (0.5, 16.0), (-0.5, 16.0))


def _mean_se(values: np.ndarray) -> Tuple[float, float]:
    values = np.asarray(values, dtype=float)
    return float(np.mean(values)), float(np.std(values, ddof=1) / math.sqrt(len(values)))


def jump_term_estimate(kernel: WPKernel, draws: Dict[str, np.ndarray]) -> Dict[str, float]:
    """
    (1/q)·E[Σ_c |x_c|·|D_cX|³·μ_c] for X = I_q(f).

    Args:
        kernel: The single-chaos kernel f
        draws: Output of sample_wp_with_gradient for I_q(f)

    Returns:
        Dict with value and stderr
    """
    q = kernel.order
    if q < 1:
        raise InvalidParams("jump term needs a kernel of order at least 1")
    weights = np.abs(kernel.levy.jumps) * kernel.levy.measure.mu
    per_path = (np.abs(draws["grad"]) ** 3) @ weights / q
    value, se = _mean_se(per_path)
    return {"value": value, "stderr": se}


def exact_fourth_moment(kernel: WPKernel) -> float:
    """
    E[X⁴] = E[(X²)²] from the product expansion of X² = I_q(f)².

    A kernel supported on the cell diagonal is a sum of independent
    single-cell integrals Y_c, so E[X⁴] = 3(Σ E[Y_c²])² + Σ κ₄(Y_c) with
    each cell expanded on a one-cell grid.
    """
    q = kernel.order
    levy = kernel.levy
    values = _diagonal_values(kernel)
    if values is None or levy.dimension == 1:
        return product_expand_wp(q, kernel, q, kernel, levy).second_moment()
    unit: Dict[Tuple[float, Optional[int]], Tuple[float, float]] = {}
    second, cumulant = 0.0, 0.0
    for cell, value in zip(levy.cells, values):
        dt = levy.time_cells[cell["t"]]
        key = (dt, cell["atom"])
        if key not in unit:
            if cell["atom"] is None:
                one = LevyGrid((dt,), (), levy.sigma)
            else:
                one = LevyGrid((dt,), (levy.jump_atoms[cell["atom"]],))
            g = WPKernel(np.ones((1,) * q), one, check=False)
            unit[key] = (math.factorial(q) * g.norm_sq(), product_expand_wp(q, g, q, g, one).second_moment())
        m2, m4 = unit[key]
        second += value ** 2 * m2
        cumulant += value ** 4 * (m4 - 3.0 * m2 ** 2)
    return 3.0 * second ** 2 + cumulant


def _diagonal_values(kernel: WPKernel) -> Optional[np.ndarray]:
    """f(c, ..., c) per cell, or None when f has mass off the diagonal."""
    q = kernel.order
    if q == 0:
        return None
    index = (np.arange(kernel.levy.dimension),) * q
    off = kernel.coeffs.copy()
    off[index] = 0.0
    if np.any(off != 0.0):
        return None
    return kernel.coeffs[index]


def wp_third_moment_check(kernel: WPKernel, n_paths: int = 100_000, seed: int = 0, threads: int = 1) -> Dict[str, Any]:
    """
    E[F³] for F = I₁(f): DF is deterministic, so E[F·‖DF‖²] = 0 and the
    whole third moment is the jump correction Σ x·f³·μ.
    """
    if kernel.order != 1:
        raise InvalidParams("third-moment jump correction is implemented for first-chaos kernels")
    levy = kernel.levy
    jump_term = float(np.sum(levy.jumps * kernel.coeffs ** 3 * levy.measure.mu))
    draws = sample_wp_with_gradient(ChaosVector.single(kernel), levy, n_paths, seed, threads=threads, key=(STREAM_WP, 3))
    m3, m3_se = _mean_se(draws["x"] ** 3)
    gauss_part, gauss_se = _mean_se(draws["x"] * draws["dx_norm_sq"])
    return {
        "third_moment_mc": m3,
        "third_moment_se": m3_se,
        "gaussian_part_mc": gauss_part,
        "gaussian_part_se": gauss_se,
        "jump_term": jump_term,
        "within_band": abs(m3 - jump_term) <= 4.0 * m3_se,
    }


def wp_fourth_moment_report(
    sequence: Sequence[Tuple[str, WPKernel]],
    n_paths: int = 100_000,
    seed: int = 0,
    threads: int = 1,
    caps: WPCaps = DEFAULT_WP_CAPS,
) -> Dict[str, Any]:
    """
    Fourth-moment diagnostics along X_n = I_q(f_n) on Wiener-Poisson grids.

    Per element: q!‖f‖², the flagged contraction norms ‖f ⊗ᵣˢ f‖ (exactly
    one of r, s nonzero, r ≤ q − 1), E[X⁴] exact and Monte Carlo, W1 to
    the standard Normal, E‖DX‖⁴ against q², Var‖DX‖², the jump integral
    E∫x²(DX)⁴dμ and the jump term of the bound.

    Returns:
        Dict with "rows" and "verdicts"

    Raises:
        InvalidParams: If an element is not a second-chaos kernel
    """
    normal = catalog("normal")
    rows: List[Dict[str, Any]] = []
    for index, (label, f) in enumerate(sequence):
        q = f.order
        if q != 2:
            raise InvalidParams(f"{label}: fourth-moment ladder needs second-chaos kernels, got order {q}")
        levy = f.levy
        second = math.factorial(q) * f.norm_sq()
        norms = contraction_norms_wp(f, levy)
        exact = exact_fourth_moment(f)
        draws = sample_wp_with_gradient(
            ChaosVector.single(f), levy, n_paths, seed, threads=threads, key=(STREAM_WP, 4, index), caps=caps
        )
        x = draws["x"]
        m4, m4_se = _mean_se(x ** 4)
        dx4, dx4_se = _mean_se(draws["dx_norm_sq"] ** 2)
        jump_weights = levy.jumps ** 2 * levy.measure.mu
        jump4, jump4_se = _mean_se((draws["grad"] ** 4) @ jump_weights)
        jump = jump_term_estimate(f, draws)
        row: Dict[str, Any] = {
            "label": label,
            "q": q,
            "cells": levy.dimension,
            "second_moment": second,
            "normalized": abs(second - 1.0) <= 1e-9,
            "max_flagged_norm": max(norms.values()) if norms else 0.0,
            "fourth_moment": exact,
            "fourth_moment_mc": m4,
            "fourth_moment_se": m4_se,
            "fourth_excess": exact - 3.0,
            "d_w_empirical": wasserstein1_empirical(x, normal),
            "d_w_floor": wasserstein1_floor(normal, len(x)),
            "dx_norm_fourth_mc": dx4,
            "dx_norm_fourth_se": dx4_se,
            "dx_norm_fourth_target": float(q * q),
            "dx_norm_variance": dx_norm_wp(f, q, levy).variance(),
            "jump_fourth_integral_mc": jump4,
            "jump_fourth_integral_se": jump4_se,
            "jump_term": jump["value"],
            "jump_term_se": jump["stderr"],
        }
        for name, value in norms.items():
            row[f"flagged_{name}"] = value
        rows.append(row)
        logger.info(
            "%s: E[X^4]=%.4f (mc %.4f ± %.4f) max flagged=%.4g d_W=%.4g",
            label, exact, m4, m4_se, row["max_flagged_norm"], row["d_w_empirical"],
        )

    verdicts = {
        "normalized": all(r["normalized"] for r in rows),
        "fourth_moment_mc": all(
            abs(r["fourth_moment_mc"] - r["fourth_moment"]) <= 4.0 * r["fourth_moment_se"] for r in rows
        ),
    }
    if len(rows) >= 2:
        ns = list(range(1, len(rows) + 1))
        verdicts["flagged_norms_decreasing"] = trend_verdict(ns, [r["max_flagged_norm"] for r in rows])["converging"]
        verdicts["excess_decreasing"] = trend_verdict(ns, [abs(r["fourth_excess"]) for r in rows])["converging"]
    last = rows[-1] if rows else None
    if last is not None:
        verdicts["last_within_band"] = abs(last["fourth_moment_mc"] - 3.0) <= 3.0 * last["fourth_moment_se"]
    return {"rows": rows, "verdicts": verdicts}


# -- standard sequences ---------------------------------------------------------

def brownian_block_kernel(n: int, dt: float = 1.0) -> WPKernel:
    """X = (2n)^{-1/2} Σ_t He₂(W_t/√Δt) on n Brownian cells."""
    levy = LevyGrid.uniform(n, dt=dt, sigma=1.0)
    return _diagonal(levy, 1.0 / math.sqrt(2.0 * n))


def jump_block_kernel(n: int, x: float = 1.0, nu: float = 1.0) -> WPKernel:
    """Second-chaos mass spread over n time cells of one jump atom."""
    levy = LevyGrid.uniform(n, dt=1.0, jump_atoms=[(x, nu)])
    return _diagonal(levy, 1.0 / math.sqrt(2.0 * n))


def single_atom_wp_kernel(q: int = 2, x: float = 1.0, nu: float = 1.0) -> WPKernel:
    """Constant kernel on one jump cell, normalized to q!‖f‖² = 1."""
    levy = LevyGrid((1.0,), ((x, nu),))
    mu = levy.measure.mu[0]
    value = 1.0 / math.sqrt(math.factorial(q) * mu ** q)
    return WPKernel(np.full((1,) * q, value), levy, check=False)


def shrinking_atom_kernel(n: int) -> WPKernel:
    """
    Second-chaos mass spread evenly over n time cells of length 1/n, each
    holding a Brownian cell and the atoms x_j = a_j/√n with intensity
    ν_j = n·λ_j: the jumps shrink while every atom cell keeps Poisson mean λ_j.
    """
    atoms = [(a / math.sqrt(n), n * lam) for a, lam in SHRINKING_ATOMS]
    levy = LevyGrid.uniform(n, dt=1.0 / n, sigma=1.0, jump_atoms=atoms)
    return _diagonal(levy, 1.0 / math.sqrt(2.0 * levy.dimension))


def _diagonal(levy: LevyGrid, weight: float) -> WPKernel:
    """Σ_c weight·e_c ⊗ e_c with e_c = 1_c/√μ_c."""
    mu = levy.measure.mu
    return WPKernel(np.diag(weight / mu), levy, check=False)


def standard_sequence(name: str, ns: Optional[Sequence[int]] = None) -> List[Tuple[str, WPKernel]]:
    """Named kernel ladders: brownian_block, jump_block, shrinking_atom, single_atom."""
    builders = {
        "brownian_block": (brownian_block_kernel, (4, 8, 16, 32, 64)),
        "jump_block": (jump_block_kernel, (4, 8, 16, 32, 64)),
        "shrinking_atom": (shrinking_atom_kernel, (4, 8, 16, 32, 64)),
        "single_atom": (lambda n: single_atom_wp_kernel(2), (1, 2, 3)),
    }
    if name not in builders:
        raise InvalidParams(f"unknown WP sequence '{name}'; choose from {sorted(builders)}")
    build, default_ns = builders[name]
    return [(f"{name}[n={n}]", build(n)) for n in (ns or default_ns)]
