"""Fractional Gaussian noise and the χ² limit of its bilinear functional."""

from .fgn import (
    FgnConfig,
    autocovariance_check,
    circulant_eigenvalues,
    fgn_covariance,
    integrated_covariance_ratio,
    map_fgn,
    sample_autocovariance,
    simulate_fgn,
)
from .functional import (
    SUBORDINATORS,
    TARGETS,
    FunctionalSamples,
    MomentLadder,
    exact_second_moment,
    functional_FT,
    get_subordinator,
    hermite_coeffs,
    moment_ladder,
    sample_FT,
)
from .scaling import envelope_slope, envelope_sweep, lt_scaling_probe, random_exponents

__all__ = [
    "FgnConfig",
    "FunctionalSamples",
    "MomentLadder",
    "SUBORDINATORS",
    "TARGETS",
    "autocovariance_check",
    "circulant_eigenvalues",
    "envelope_slope",
    "envelope_sweep",
    "exact_second_moment",
    "fgn_covariance",
    "functional_FT",
    "get_subordinator",
    "hermite_coeffs",
    "integrated_covariance_ratio",
    "lt_scaling_probe",
    "map_fgn",
    "moment_ladder",
    "random_exponents",
    "sample_FT",
    "sample_autocovariance",
    "simulate_fgn",
]
