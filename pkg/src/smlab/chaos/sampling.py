"""
Monte Carlo sampling of multiple integrals.

On a grid, I_q(f) is a finite sum over sorted multi-indices of products
of per-cell orthogonal polynomials. For a Brownian cell with mass μ and
ξ = √μ·η the polynomial of degree m is μ^{m/2} He_m(η). The per-cell
values are tabulated once per block; the Wiener-Poisson module supplies
its own table (Charlier polynomials for jump cells) and reuses
evaluate_with_table().
"""

import logging
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np

from ..errors import InvalidParams
from ..parallel import map_blocks
from ..reports import save_arrays
from .kernels import DEFAULT_CAPS, ChaosCaps, ChaosVector, GridMeasure, SymmetricKernel

logger = logging.getLogger(__name__)

# Gather buffer limit (paths × entries × order) per chunk.
CHUNK_ELEMENTS = 2 ** 22

STREAM_CHAOS = 21


def hermite_table(eta: np.ndarray, masses: np.ndarray, max_degree: int) -> np.ndarray:
    """
    T[path, cell, m] = μ_cell^{m/2} He_m(η[path, cell]) for m ≤ max_degree,
    with one extra padding cell of ones.

    He_{m+1}(x) = x He_m(x) − m He_{m−1}(x).
    """
    paths, n = eta.shape
    table = np.ones((paths, n + 1, max_degree + 1))
    he_prev = np.ones((paths, n))
    he = eta.copy()
    sqrt_mu = np.sqrt(masses)
    scale = np.ones(n)
    for m in range(1, max_degree + 1):
        scale = scale * sqrt_mu
        if m > 1:
            he_prev, he = he, eta * he - (m - 1) * he_prev
        table[:, :n, m] = he * scale
    return table


def evaluate_kernel(kernel: SymmetricKernel, table: np.ndarray) -> np.ndarray:
    """I_q(f) on every path of a basis table."""
    paths = table.shape[0]
    canon = kernel.canonical
    if kernel.order == 0:
        return np.full(paths, float(canon["value"][0]))
    weights = canon["value"] * canon["factor"]
    cells, mults = canon["cells"], canon["mults"]
    out = np.zeros(paths)
    if len(weights) == 0:
        return out
    chunk = max(1, CHUNK_ELEMENTS // max(1, paths * kernel.order))
    for start in range(0, len(weights), chunk):
        stop = start + chunk
        prod = np.prod(table[:, cells[start:stop], mults[start:stop]], axis=2)
        out += prod @ weights[start:stop]
    return out


def evaluate_with_table(F: ChaosVector, table: np.ndarray) -> np.ndarray:
    """Σ_q I_q(f_q) on every path of a basis table."""
    out = np.zeros(table.shape[0])
    for kernel in F.kernels.values():
        out += evaluate_kernel(kernel, table)
    return out


def evaluate(F: ChaosVector, eta: np.ndarray) -> np.ndarray:
    """Evaluate F on standardized Gaussian cell noise η (paths × n)."""
    table = hermite_table(eta, F.grid.mu, max(F.max_order, 1))
    return evaluate_with_table(F, table)


def _check_caps(functionals: Sequence[ChaosVector], caps: ChaosCaps) -> GridMeasure:
    grid = functionals[0].grid
    for F in functionals:
        if F.grid.dimension != grid.dimension:
            raise InvalidParams("all functionals must live on the same grid")
        for q in F.kernels:
            caps.check(grid.dimension, q)
    return grid


def sample_many(
    functionals: Sequence[ChaosVector],
    n_paths: int,
    seed: int,
    threads: int = 1,
    key: Sequence[int] = (STREAM_CHAOS,),
    caps: ChaosCaps = DEFAULT_CAPS,
) -> np.ndarray:
    """
    Sample several functionals on the same Gaussian noise.

    Returns:
        Array of shape (n_paths, len(functionals))

    Raises:
        CapExceeded: If a grid or order exceeds the caps
    """
    grid = _check_caps(functionals, caps)
    n = grid.dimension
    degree = max(max(F.max_order for F in functionals), 1)

    def _block(rng: np.random.Generator, size: int, block: int) -> np.ndarray:
        eta = rng.standard_normal((size, n))
        table = hermite_table(eta, grid.mu, degree)
        return np.column_stack([evaluate_with_table(F, table) for F in functionals])

    return map_blocks(_block, n_paths, seed, key=key, threads=threads)


def sample(
    F: ChaosVector,
    n_paths: int,
    seed: int,
    threads: int = 1,
    key: Sequence[int] = (STREAM_CHAOS,),
    caps: ChaosCaps = DEFAULT_CAPS,
) -> np.ndarray:
    """
    Draw n_paths samples of F = Σ I_q(f_q).

    Cell noise ξ_i ~ Normal(0, μ_i) is drawn independently per cell, in
    blocks with their own Philox streams, so the result depends only on
    (seed, key, n_paths).

    Raises:
        CapExceeded: If the grid or an order exceeds the caps
    """
    return sample_many([F], n_paths, seed, threads=threads, key=key, caps=caps)[:, 0]


def derivative_fields(F: ChaosVector) -> Dict[int, ChaosVector]:
    """D_cF = Σ_q q·I_{q−1}(f_q(c, ·)) for every cell c."""
    fields = {}
    for cell in range(F.grid.dimension):
        kernels = {
            q - 1: k.section(cell).scaled(float(q)) for q, k in F.kernels.items() if q > 0
        }
        fields[cell] = ChaosVector(kernels, F.grid)
    return fields


def sample_with_gradient(
    F: ChaosVector,
    n_paths: int,
    seed: int,
    threads: int = 1,
    key: Sequence[int] = (STREAM_CHAOS,),
    caps: ChaosCaps = DEFAULT_CAPS,
) -> Dict[str, np.ndarray]:
    """
    Paired samples of F and ‖DF‖² = Σ_c μ_c (D_cF)².

    Returns:
        Dict with "x" (n_paths,), "dx_norm_sq" (n_paths,)
    """
    grid = _check_caps([F], caps)
    n = grid.dimension
    degree = max(F.max_order, 1)
    fields = derivative_fields(F)
    mu = grid.mu

    def _block(rng: np.random.Generator, size: int, block: int) -> Dict[str, np.ndarray]:
        eta = rng.standard_normal((size, n))
        table = hermite_table(eta, mu, degree)
        grad = np.column_stack([evaluate_with_table(fields[c], table) for c in range(n)])
        return {"x": evaluate_with_table(F, table), "dx_norm_sq": (grad ** 2) @ mu}

    return map_blocks(_block, n_paths, seed, key=key, threads=threads)


def export_samples(
    out_dir: str,
    name: str,
    samples: Dict[str, np.ndarray],
    seed: int,
    n_paths: int,
    caps: ChaosCaps = DEFAULT_CAPS,
    extra: Optional[Dict] = None,
) -> str:
    """Write sample arrays plus a manifest with seed, n_paths and caps."""
    meta = {"seed": seed, "n_paths": n_paths, "caps": caps.to_dict(), **(extra or {})}
    path = save_arrays(Path(out_dir), name, samples, meta)
    logger.info("Exported %d paths of %s to %s", n_paths, name, path)
    return path
