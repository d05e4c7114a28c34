"""
Fractional Gaussian noise on the unit-step grid.

X_t = B^H_{t+1} − B^H_t is stationary with covariance
C(t) = ½(|t+1|^{2H} + |t−1|^{2H} − 2|t|^{2H}), C(0) = 1. Paths come from
circulant embedding; a Cholesky factor of the Toeplitz covariance is the
fallback when the embedding is not non-negative definite.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import linalg

from ..errors import CapExceeded, EmbeddingNotPSD, InvalidParams
from ..parallel import map_blocks

logger = logging.getLogger(__name__)

MAX_STEPS = 2 ** 14
# Largest n for which the O(n²) Cholesky fallback is attempted.
CHOLESKY_MAX = 2048
# Per-block buffer limit (paths × steps); also caps what simulate_fgn returns.
BLOCK_ELEMENTS = 2 ** 22
MAX_RETURN_ELEMENTS = 2 ** 26
EIGEN_ATOL = 1e-10

STREAM_FGN = 61


@dataclass(frozen=True)
class FgnConfig:
    """One fGn experiment: Hurst index, grid length, path budget and subordinator."""

    hurst: float
    n_steps: int
    n_paths: int = 100_000
    f_choice: str = "identity"
    seed: int = 0

    def __post_init__(self):
        if not 0.5 < self.hurst < 1.0:
            raise InvalidParams(f"Hurst index must lie in (1/2, 1), got {self.hurst}")
        if self.n_steps < 1 or self.n_paths < 2:
            raise InvalidParams("n_steps must be positive and n_paths at least 2")


def fgn_covariance(hurst: float, lags) -> np.ndarray:
    """C(t) for integer or real lags."""
    t = np.abs(np.asarray(lags, dtype=float))
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(t + 1.0) ** h2 + np.abs(t - 1.0) ** h2 - 2.0 * t ** h2)


def integrated_covariance_ratio(hurst: float, T: int) -> float:
    """κ_T = T^{−2H} Σ_{s,t<T} C(s − t); equals 1 on the unit-step grid."""
    k = np.arange(1, T)
    total = T * 1.0 + 2.0 * float(np.sum((T - k) * fgn_covariance(hurst, k)))
    return total / T ** (2.0 * hurst)


def _check_hurst(hurst: float) -> None:
    if not 0.0 < hurst < 1.0:
        raise InvalidParams(f"Hurst index must lie in (0, 1), got {hurst}")


def circulant_eigenvalues(hurst: float, n: int) -> np.ndarray:
    """
    Eigenvalues of the 2n-periodic embedding of the covariance row.

    Raises:
        EmbeddingNotPSD: If an eigenvalue is negative beyond rounding
    """
    row = fgn_covariance(hurst, np.arange(n + 1))
    embedded = np.concatenate([row, row[-2:0:-1]])
    eig = np.fft.fft(embedded).real
    if np.min(eig) < -EIGEN_ATOL * np.max(eig):
        raise EmbeddingNotPSD(f"circulant embedding of fGn(H={hurst}, n={n}) has eigenvalue {np.min(eig):.3g}")
    return np.clip(eig, 0.0, None)


def _circulant_block(eig: np.ndarray, n: int) -> Callable[[np.random.Generator, int, int], np.ndarray]:
    m = len(eig)
    scale = np.sqrt(eig / m)

    def _block(rng: np.random.Generator, size: int, block: int) -> np.ndarray:
        # Real and imaginary parts are two independent paths.
        pairs = (size + 1) // 2
        z = rng.standard_normal((pairs, m)) + 1j * rng.standard_normal((pairs, m))
        y = np.fft.fft(z * scale, axis=1)[:, :n]
        return np.concatenate([y.real, y.imag], axis=0)[:size]

    return _block


def _cholesky_block(hurst: float, n: int) -> Callable[[np.random.Generator, int, int], np.ndarray]:
    factor = linalg.cholesky(linalg.toeplitz(fgn_covariance(hurst, np.arange(n))), lower=True)

    def _block(rng: np.random.Generator, size: int, block: int) -> np.ndarray:
        return rng.standard_normal((size, n)) @ factor.T

    return _block


def fgn_block_sampler(hurst: float, n: int, method: str = "auto") -> Callable[[np.random.Generator, int, int], np.ndarray]:
    """
    Block function (rng, size, block) → (size, n) fGn paths.

    Args:
        hurst: Hurst index in (0, 1)
        n: Path length
        method: "circulant", "cholesky" or "auto" (circulant, Cholesky
            fallback for n ≤ CHOLESKY_MAX)

    Raises:
        CapExceeded: If n exceeds MAX_STEPS
        EmbeddingNotPSD: If the embedding fails and no fallback applies
    """
    _check_hurst(hurst)
    if n > MAX_STEPS:
        raise CapExceeded(f"{n} steps exceed the fGn cap {MAX_STEPS}")
    if method == "cholesky":
        return _cholesky_block(hurst, n)
    if method not in ("auto", "circulant"):
        raise InvalidParams(f"unknown fGn method '{method}'")
    try:
        return _circulant_block(circulant_eigenvalues(hurst, n), n)
    except EmbeddingNotPSD as exc:
        if method == "circulant" or n > CHOLESKY_MAX:
            raise
        message = f"{exc}; falling back to Cholesky"
        warnings.warn(message, RuntimeWarning, stacklevel=2)
        logger.warning(message)
        return _cholesky_block(hurst, n)


def block_size_for(n: int) -> int:
    return max(2, min(4096, BLOCK_ELEMENTS // max(n, 1)))


def simulate_fgn(
    hurst: float,
    n: int,
    paths: int,
    seed: int,
    threads: int = 1,
    method: str = "auto",
    key: Sequence[int] = (STREAM_FGN,),
) -> np.ndarray:
    """
    Simulate fGn paths.

    Returns:
        Array of shape (paths, n)

    Raises:
        CapExceeded: If n exceeds MAX_STEPS or paths × n the return buffer
    """
    if paths * n > MAX_RETURN_ELEMENTS:
        raise CapExceeded(f"{paths} paths of {n} steps exceed the return buffer ({MAX_RETURN_ELEMENTS} values)")
    sampler = fgn_block_sampler(hurst, n, method)
    return map_blocks(sampler, paths, seed, key=(*key, n), threads=threads, block_size=block_size_for(n))


def map_fgn(
    hurst: float,
    n: int,
    paths: int,
    seed: int,
    reduce: Callable[[np.ndarray], np.ndarray],
    threads: int = 1,
    method: str = "auto",
    key: Sequence[int] = (STREAM_FGN,),
):
    """
    Apply reduce to every block of fGn paths without keeping the paths.

    Draws the same paths as simulate_fgn for the same arguments.
    """
    sampler = fgn_block_sampler(hurst, n, method)

    def _block(rng: np.random.Generator, size: int, block: int):
        return reduce(sampler(rng, size, block))

    return map_blocks(_block, paths, seed, key=(*key, n), threads=threads, block_size=block_size_for(n))


def sample_autocovariance(paths: np.ndarray, max_lag: int) -> np.ndarray:
    """
    Per-path lag products averaged over time: column k holds the mean of
    X_t·X_{t+k}, one value per path, so the column mean estimates C(k).
    """
    n = paths.shape[1]
    if max_lag >= n:
        raise InvalidParams(f"lag {max_lag} needs more than {n} steps")
    return np.column_stack([np.mean(paths[:, : n - k] * paths[:, k:], axis=1) for k in range(max_lag + 1)])


def autocovariance_check(
    hurst: float, n: int, paths: int, seed: int, max_lag: int = 10, bands: float = 4.0, method: str = "auto"
) -> dict:
    """Sample autocovariance at lags 0..max_lag against C(t)."""
    products = sample_autocovariance(simulate_fgn(hurst, n, paths, seed, method=method), max_lag)
    est = products.mean(axis=0)
    se = products.std(axis=0, ddof=1) / math.sqrt(paths)
    target = fgn_covariance(hurst, np.arange(max_lag + 1))
    ok = np.abs(est - target) <= bands * se
    return {
        "lags": list(range(max_lag + 1)),
        "estimate": est.tolist(),
        "stderr": se.tolist(),
        "target": target.tolist(),
        "within_band": bool(np.all(ok)),
    }