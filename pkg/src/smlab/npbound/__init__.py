"""
Distance estimates and the bounds built on g*(X) − g_X, with the
characterization and convergence checkers.
"""

from .bounds import (
    NORMAL_K_FM,
    NORMAL_K_W,
    BoundReport,
    CharacterizationReport,
    characterize,
    moment_bound,
    np_estimate,
    resolve_k,
    z_side_moments,
)
from .checks import (
    chaos_gstar_moment_check,
    gamma_chaos_check,
    pearson_chaos_check,
    pearson_convergence_check,
    polynomial_gstar_check,
    sample_moments,
    trend_verdict,
)
from .distances import wasserstein1_empirical, wasserstein1_floor, wasserstein1_two_sample

__all__ = [
    "BoundReport",
    "CharacterizationReport",
    "NORMAL_K_FM",
    "NORMAL_K_W",
    "chaos_gstar_moment_check",
    "characterize",
    "gamma_chaos_check",
    "moment_bound",
    "np_estimate",
    "pearson_chaos_check",
    "pearson_convergence_check",
    "polynomial_gstar_check",
    "resolve_k",
    "sample_moments",
    "trend_verdict",
    "wasserstein1_empirical",
    "wasserstein1_floor",
    "wasserstein1_two_sample",
    "z_side_moments",
]
