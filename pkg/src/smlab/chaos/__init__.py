"""Wiener chaos on a weighted grid: kernels, sampling, operators, diagnostics."""

from .diagnostics import (
    block_kernel,
    fourth_cumulant,
    fourth_moment_report,
    moment_via_formula,
    second_chaos_spectrum,
    single_atom_kernel,
)
from .kernels import (
    DEFAULT_CAPS,
    ChaosCaps,
    ChaosVector,
    GridMeasure,
    Kernel,
    SymmetricKernel,
    contract,
    contraction_norm,
    contraction_norms,
    diagonal_kernel,
    product_expand,
    random_kernel,
    symmetrize,
    unit_cell_kernel,
)
from .operators import (
    L_inverse,
    L_operator,
    chain_identity_gap,
    dx_norm_expansion,
    dx_norm_variance,
    gamma_expansion,
    inner_derivatives,
    malliavin_D,
)
from .sampling import evaluate, export_samples, sample, sample_many, sample_with_gradient

__all__ = [
    "ChaosCaps",
    "ChaosVector",
    "DEFAULT_CAPS",
    "GridMeasure",
    "Kernel",
    "L_inverse",
    "L_operator",
    "SymmetricKernel",
    "block_kernel",
    "chain_identity_gap",
    "contract",
    "contraction_norm",
    "contraction_norms",
    "diagonal_kernel",
    "dx_norm_expansion",
    "dx_norm_variance",
    "evaluate",
    "export_samples",
    "fourth_cumulant",
    "fourth_moment_report",
    "gamma_expansion",
    "inner_derivatives",
    "malliavin_D",
    "moment_via_formula",
    "product_expand",
    "random_kernel",
    "sample",
    "sample_many",
    "sample_with_gradient",
    "second_chaos_spectrum",
    "single_atom_kernel",
    "symmetrize",
    "unit_cell_kernel",
]
