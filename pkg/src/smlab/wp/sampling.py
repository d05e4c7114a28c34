"""
Monte Carlo sampling of Wiener-Poisson multiple integrals.

Brownian cells draw η ~ Normal(0, 1) and use μ^{m/2}He_m(η); a jump cell
with atom x and Poisson mean λ = νΔt draws N ~ Poisson(λ) and uses
x^m·C_m(N; λ), where C_m is the monic Charlier polynomial
C_{m+1}(n) = (n − m − λ)C_m(n) − mλC_{m−1}(n). The Gaussian draws come
first in every block, so a grid without jump atoms reproduces the
Wiener sampler path by path for the same seed and key.
"""

import logging
from typing import Dict, Sequence

import numpy as np

from ..chaos.kernels import ChaosVector
from ..chaos.sampling import STREAM_CHAOS, derivative_fields, evaluate_with_table, hermite_table
from ..errors import InvalidParams
from ..parallel import map_blocks
from .grid import DEFAULT_WP_CAPS, LevyGrid, WPCaps

logger = logging.getLogger(__name__)


def charlier_table(counts: np.ndarray, intensities: np.ndarray, jumps: np.ndarray, max_degree: int) -> np.ndarray:
    """T[path, cell, m] = x^m·C_m(N; λ) for the jump cells, without padding."""
    paths, n = counts.shape
    table = np.ones((paths, n, max_degree + 1))
    if max_degree == 0:
        return table
    counts = counts.astype(float)
    prev = np.ones((paths, n))
    cur = counts - intensities
    table[:, :, 1] = cur * jumps
    for m in range(1, max_degree):
        prev, cur = cur, (counts - m - intensities) * cur - m * intensities * prev
        table[:, :, m + 1] = cur * jumps ** (m + 1)
    return table


def wp_table(rng: np.random.Generator, size: int, levy: LevyGrid, max_degree: int) -> np.ndarray:
    """Per-cell basis table for one block of paths, padded with a cell of ones."""
    brownian = levy.brownian_mask
    mu = levy.measure.mu
    eta = rng.standard_normal((size, int(brownian.sum())))
    table = np.ones((size, levy.dimension + 1, max_degree + 1))
    if brownian.any():
        table[:, np.flatnonzero(brownian)] = hermite_table(eta, mu[brownian], max_degree)[:, :-1]
    if (~brownian).any():
        lam = levy.intensities[~brownian]
        counts = rng.poisson(lam, size=(size, len(lam)))
        table[:, np.flatnonzero(~brownian)] = charlier_table(counts, lam, levy.jumps[~brownian], max_degree)
    return table


def _check(functionals: Sequence[ChaosVector], levy: LevyGrid, caps: WPCaps) -> int:
    caps.check_grid(levy)
    for F in functionals:
        if F.grid.dimension != levy.dimension:
            raise InvalidParams(f"functional on {F.grid.dimension} cells, grid has {levy.dimension}")
        for q in F.kernels:
            caps.check_order(levy, q)
    return max(max(F.max_order for F in functionals), 1)


def sample_wp_many(
    functionals: Sequence[ChaosVector],
    levy: LevyGrid,
    n_paths: int,
    seed: int,
    threads: int = 1,
    key: Sequence[int] = (STREAM_CHAOS,),
    caps: WPCaps = DEFAULT_WP_CAPS,
) -> np.ndarray:
    """
    Sample several functionals on the same Wiener-Poisson noise.

    Returns:
        Array of shape (n_paths, len(functionals))

    Raises:
        CapExceeded: If the grid or an order exceeds the caps
    """
    degree = _check(functionals, levy, caps)

    def _block(rng: np.random.Generator, size: int, block: int) -> np.ndarray:
        table = wp_table(rng, size, levy, degree)
        return np.column_stack([evaluate_with_table(F, table) for F in functionals])

    return map_blocks(_block, n_paths, seed, key=key, threads=threads)


def sample_wp(
    F: ChaosVector,
    levy: LevyGrid,
    n_paths: int,
    seed: int,
    threads: int = 1,
    key: Sequence[int] = (STREAM_CHAOS,),
    caps: WPCaps = DEFAULT_WP_CAPS,
) -> np.ndarray:
    """Draw n_paths samples of F = Σ I_q(f_q) on a LevyGrid."""
    return sample_wp_many([F], levy, n_paths, seed, threads=threads, key=key, caps=caps)[:, 0]


def sample_wp_with_gradient(
    F: ChaosVector,
    levy: LevyGrid,
    n_paths: int,
    seed: int,
    threads: int = 1,
    key: Sequence[int] = (STREAM_CHAOS,),
    caps: WPCaps = DEFAULT_WP_CAPS,
) -> Dict[str, np.ndarray]:
    """
    Paired samples of F, the per-cell derivative D_cF and ‖DF‖².

    D_cF = Σ q·I_{q−1}(f_q(c, ·)); on a jump cell this is the add-one-jump
    difference divided by the jump size.

    Returns:
        Dict with "x" (n_paths,), "grad" (n_paths, cells), "dx_norm_sq" (n_paths,)
    """
    degree = _check([F], levy, caps)
    fields = derivative_fields(F)
    mu = levy.measure.mu
    n = levy.dimension

    def _block(rng: np.random.Generator, size: int, block: int) -> Dict[str, np.ndarray]:
        table = wp_table(rng, size, levy, degree)
        grad = np.column_stack([evaluate_with_table(fields[c], table) for c in range(n)])
        return {"x": evaluate_with_table(F, table), "grad": grad, "dx_norm_sq": (grad ** 2) @ mu}

    out = map_blocks(_block, n_paths, seed, key=key, threads=threads)
    logger.debug("Sampled %d WP paths with gradients on %d cells", n_paths, n)
    return out
