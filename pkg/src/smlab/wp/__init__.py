"""Wiener-Poisson chaos on time × jump-atom grids."""

from .diagnostics import (
    brownian_block_kernel,
    exact_fourth_moment,
    jump_block_kernel,
    jump_term_estimate,
    shrinking_atom_kernel,
    single_atom_wp_kernel,
    standard_sequence,
    wp_fourth_moment_report,
    wp_third_moment_check,
)
from .grid import (
    DEFAULT_WP_CAPS,
    LevyGrid,
    WPCaps,
    WPKernel,
    contract_ws,
    contraction_norm_ws,
    contraction_norms_wp,
    dx_norm_wp,
    flagged_pairs,
    product_expand_wp,
    wp_symmetrize,
)
from .sampling import charlier_table, sample_wp, sample_wp_many, sample_wp_with_gradient, wp_table

__all__ = [
    "DEFAULT_WP_CAPS",
    "LevyGrid",
    "WPCaps",
    "WPKernel",
    "brownian_block_kernel",
    "charlier_table",
    "contract_ws",
    "contraction_norm_ws",
    "contraction_norms_wp",
    "dx_norm_wp",
    "exact_fourth_moment",
    "flagged_pairs",
    "jump_block_kernel",
    "jump_term_estimate",
    "product_expand_wp",
    "sample_wp",
    "sample_wp_many",
    "sample_wp_with_gradient",
    "shrinking_atom_kernel",
    "single_atom_wp_kernel",
    "standard_sequence",
    "wp_fourth_moment_report",
    "wp_symmetrize",
    "wp_third_moment_check",
    "wp_table",
]
