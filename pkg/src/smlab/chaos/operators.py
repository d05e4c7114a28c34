"""
Malliavin operators at the kernel level: D, L, L⁻¹ and the chaos
expansion of ⟨DF, DG⟩.
"""

import math
from typing import Dict

import numpy as np

from ..errors import NonCentered
from .kernels import ChaosVector, SymmetricKernel, contract, product_expand, symmetrize
from .sampling import derivative_fields


def malliavin_D(F: ChaosVector) -> Dict[int, ChaosVector]:
    """
    D_rF = Σ_q q·I_{q−1}(f_q(r, ·)), one ChaosVector per grid cell r.

    For F = I₁(f) each field is the constant f(r).
    """
    return derivative_fields(F)


def L_operator(F: ChaosVector) -> ChaosVector:
    """LF = −Σ q·I_q(f_q)."""
    return F.map_kernels(lambda q, k: k.scaled(-float(q)))


def L_inverse(F: ChaosVector) -> ChaosVector:
    """
    L⁻¹F = −Σ_{q≥1} (1/q)·I_q(f_q).

    Raises:
        NonCentered: If F has a nonzero order-0 kernel
    """
    if F.mean != 0.0:
        raise NonCentered(f"L^-1 needs E[F] = 0, got {F.mean}")
    return ChaosVector({q: k.scaled(-1.0 / q) for q, k in F.kernels.items() if q > 0}, F.grid)


def centered(F: ChaosVector) -> ChaosVector:
    """F − E[F]."""
    return ChaosVector({q: k for q, k in F.kernels.items() if q > 0}, F.grid)


def inner_derivatives(F: ChaosVector, G: ChaosVector) -> ChaosVector:
    """
    ⟨DF, DG⟩ = Σ_c μ_c D_cF·D_cG, expanded with the product formula
    cell by cell.
    """
    grid = F.grid
    mu = grid.mu
    dF = derivative_fields(F)
    dG = derivative_fields(G)
    total = ChaosVector({}, grid)
    for cell in range(grid.dimension):
        for p, a in dF[cell].kernels.items():
            for q, b in dG[cell].kernels.items():
                total = total + product_expand(p, a, q, b).scaled(float(mu[cell]))
    return total


def gamma_expansion(F: ChaosVector) -> ChaosVector:
    """⟨DF, −DL⁻¹F⟩ for centered F."""
    return inner_derivatives(F, L_inverse(F).scaled(-1.0))


def dx_norm_expansion(f: SymmetricKernel, q: int) -> ChaosVector:
    """
    ‖DI_q(f)‖² = Σ_{r=1}^{q} r·r!·C(q,r)²·I_{2q−2r}(f ⊗̃_r f).

    The order-0 term is q·q!·‖f‖², so E‖DX‖² = q·E[X²].
    """
    kernels = {}
    for r in range(1, q + 1):
        coef = r * math.factorial(r) * math.comb(q, r) ** 2
        order = 2 * q - 2 * r
        kernels[order] = symmetrize(contract(f, f, r), order).scaled(float(coef))
    return ChaosVector(kernels, f.grid)


def dx_norm_variance(f: SymmetricKernel, q: int) -> float:
    """Var(‖DI_q(f)‖²) from the exact expansion."""
    expansion = dx_norm_expansion(f, q)
    return float(
        sum(math.factorial(k) * kern.norm_sq() for k, kern in expansion.kernels.items() if k > 0)
    )


def chain_identity_gap(F: ChaosVector) -> float:
    """
    max |coefficient| of ⟨DF, −DL⁻¹F⟩ − (1/q)‖DF‖² for single-chaos F;
    zero up to rounding.
    """
    q = F.single_order()
    if q is None or q == 0:
        raise NonCentered("chain identity needs F in a single chaos of order ≥ 1")
    lhs = gamma_expansion(F)
    rhs = inner_derivatives(F, F).scaled(1.0 / q)
    gap = 0.0
    for order in set(lhs.kernels) | set(rhs.kernels):
        a = lhs.kernels[order].coeffs if order in lhs.kernels else 0.0
        b = rhs.kernels[order].coeffs if order in rhs.kernels else 0.0
        gap = max(gap, float(np.max(np.abs(np.asarray(a) - np.asarray(b)))))
    return gap
