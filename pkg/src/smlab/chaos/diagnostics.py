"""
Moment identities and fourth-moment diagnostics for fixed-chaos
sequences.
"""

import logging
import math
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from ..errors import OrderMismatch
from .kernels import (
    DEFAULT_CAPS,
    ChaosCaps,
    ChaosVector,
    GridMeasure,
    SymmetricKernel,
    contract,
    contraction_norms,
    diagonal_kernel,
    symmetrize,
    unit_cell_kernel,
)
from .operators import dx_norm_variance
from .sampling import STREAM_CHAOS, sample_with_gradient

logger = logging.getLogger(__name__)


def _mean_se(values: np.ndarray) -> Tuple[float, float]:
    n = len(values)
    return float(np.mean(values)), float(np.std(values, ddof=1) / math.sqrt(n))


def moment_via_formula(
    F: ChaosVector,
    r: int,
    n_paths: int = 100_000,
    seed: int = 0,
    threads: int = 1,
    caps: ChaosCaps = DEFAULT_CAPS,
) -> Dict[str, float]:
    """
    Compare E[F^{r+1}] with (r/q)·E[F^{r−1}‖DF‖²] on the same paths.

    Returns:
        Dict with lhs, lhs_se, rhs, rhs_se, diff, diff_se (paired)

    Raises:
        OrderMismatch: If F is not in a single chaos
        CapExceeded: If the grid or order exceeds the caps
    """
    q = F.single_order()
    if q is None or q == 0:
        raise OrderMismatch("moments formula needs F in a single chaos of order >= 1")
    if r < 1:
        raise OrderMismatch(f"moment index r must be >= 1, got {r}")
    draws = sample_with_gradient(F, n_paths, seed, threads=threads, key=(STREAM_CHAOS, 1), caps=caps)
    x, dx = draws["x"], draws["dx_norm_sq"]
    lhs = x ** (r + 1)
    rhs = (r / q) * x ** (r - 1) * dx
    out = {}
    for name, values in (("lhs", lhs), ("rhs", rhs), ("diff", lhs - rhs)):
        out[name], out[f"{name}_se"] = _mean_se(values)
    return out


def second_chaos_spectrum(f: SymmetricKernel) -> np.ndarray:
    """
    Eigenvalues λ_k of the order-2 kernel as an operator on L²(μ),
    sorted by decreasing magnitude. I₂(f) = Σ λ_k (ζ_k² − 1).
    """
    if f.order != 2:
        raise OrderMismatch(f"spectrum needs an order-2 kernel, got order {f.order}")
    eig = np.linalg.eigvalsh(f.weighted())
    return eig[np.argsort(-np.abs(eig))]


def fourth_cumulant(f: SymmetricKernel) -> float:
    """
    E[X⁴] − 3(E[X²])² for X = I_q(f):

        (3/q) Σ_{r=1}^{q−1} r·(r!)²·C(q,r)⁴·(2q−2r)!·‖f ⊗̃_r f‖².
    """
    q = f.order
    total = 0.0
    for r in range(1, q):
        norm_sq = symmetrize(contract(f, f, r), 2 * q - 2 * r).norm_sq()
        total += r * math.factorial(r) ** 2 * math.comb(q, r) ** 4 * math.factorial(2 * q - 2 * r) * norm_sq
    return 3.0 * total / q if q > 0 else 0.0


def block_kernel(n: int, mass: float = 1.0) -> SymmetricKernel:
    """(1/√(2n))·Σ_i e_i⊗e_i on n disjoint cells; E[I₂(f)²] = 1."""
    grid = GridMeasure.uniform(n, mass)
    return diagonal_kernel(grid, [1.0 / math.sqrt(2.0 * n)] * n)


def single_atom_kernel(q: int = 2, mass: float = 1.0) -> SymmetricKernel:
    """e^{⊗q} on a one-cell grid; I₂ of it is ξ² − 1."""
    return unit_cell_kernel(GridMeasure.uniform(1, mass), 0, q)


def _sample_variance_se(values: np.ndarray) -> Tuple[float, float]:
    n = len(values)
    centred = values - np.mean(values)
    var = float(np.mean(centred ** 2) * n / (n - 1))
    m4 = float(np.mean(centred ** 4))
    return var, math.sqrt(max(m4 - var * var, 0.0) / n)


def fourth_moment_report(
    sequence: Sequence[Tuple[str, SymmetricKernel]],
    sigma2: float = 1.0,
    n_paths: int = 100_000,
    seed: int = 0,
    threads: int = 1,
    caps: ChaosCaps = DEFAULT_CAPS,
) -> Dict[str, Any]:
    """
    Fourth-moment diagnostics along a kernel sequence X_n = I_q(f_n).

    Per element: the exact and Monte Carlo E[X⁴], the contraction norms,
    Var(‖DX‖²/q) exact and Monte Carlo, and the cap
    (q−1)/(3q)·(E[X⁴] − 3σ⁴). For q = 2 the eigenvalue identity
    E[X⁴] − 3σ⁴ = 48Σλ⁴ is reported as well.

    Returns:
        Dict with "rows" (one per element) and "verdicts"
    """
    rows: List[Dict[str, Any]] = []
    for index, (label, f) in enumerate(sequence):
        q = f.order
        second = math.factorial(q) * f.norm_sq()
        excess = fourth_cumulant(f)
        var_dx = dx_norm_variance(f, q) / q ** 2
        cap = (q - 1) / (3.0 * q) * excess

        draws = sample_with_gradient(
            ChaosVector.single(f), n_paths, seed, threads=threads, key=(STREAM_CHAOS, 2, index), caps=caps
        )
        m4, m4_se = _mean_se(draws["x"] ** 4)
        var_mc, var_mc_se = _sample_variance_se(draws["dx_norm_sq"] / q)

        norms = contraction_norms(f)
        row: Dict[str, Any] = {
            "label": label,
            "q": q,
            "second_moment": second,
            "normalized": abs(second - sigma2) <= 1e-9 * max(1.0, sigma2),
            "fourth_moment": 3.0 * second ** 2 + excess,
            "fourth_moment_mc": m4,
            "fourth_moment_se": m4_se,
            "max_contraction_norm": max(norms.values()) if norms else 0.0,
            "var_dx_over_q": var_dx,
            "var_dx_over_q_mc": var_mc,
            "var_dx_over_q_se": var_mc_se,
            "variance_cap": cap,
            "cap_holds": var_dx <= cap * (1 + 1e-9) + 1e-15,
            "cap_holds_mc": var_mc <= (q - 1) / (3.0 * q) * (m4 - 3.0 * second ** 2) + 3.0 * (var_mc_se + m4_se),
        }
        for r, value in norms.items():
            row[f"contraction_norm_{r}"] = value
        if q == 2:
            lam = second_chaos_spectrum(f)
            row["eigen_excess"] = 48.0 * float(np.sum(lam ** 4))
            row["max_eigenvalue"] = float(np.max(np.abs(lam)))
        rows.append(row)
        logger.info(
            "%s: E[X^4]=%.4f (mc %.4f ± %.4f) max||f(x)f||=%.4g",
            label, row["fourth_moment"], m4, m4_se, row["max_contraction_norm"],
        )

    verdicts = {
        "normalized": all(r["normalized"] for r in rows),
        "variance_cap": all(r["cap_holds"] and r["cap_holds_mc"] for r in rows),
        "fourth_moment_mc": all(
            abs(r["fourth_moment_mc"] - r["fourth_moment"]) <= 4.0 * r["fourth_moment_se"] for r in rows
        ),
    }
    if len(rows) >= 2:
        first, last = rows[0], rows[-1]
        verdicts["decreasing_excess"] = (
            last["fourth_moment"] - 3 * last["second_moment"] ** 2
            < first["fourth_moment"] - 3 * first["second_moment"] ** 2
        )
    return {"rows": rows, "verdicts": verdicts}
