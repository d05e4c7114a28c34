"""
Block-parallel Monte Carlo plumbing.

Paths are split into fixed-size blocks. Block b draws from its own
counter-based stream Philox(SeedSequence([seed, *key, b])), so the
concatenated output depends only on (seed, key, n_paths, block_size),
never on how many worker threads evaluated the blocks.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

BLOCK_SIZE = 4096

BlockResult = Union[np.ndarray, Dict[str, np.ndarray]]


def block_rng(seed: int, key: Sequence[int], block: int) -> np.random.Generator:
    """Return the generator for one block of one named stream."""
    entropy = [int(seed), *[int(k) for k in key], int(block)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def block_sizes(n_paths: int, block_size: int = BLOCK_SIZE) -> List[int]:
    """Split n_paths into full blocks plus a remainder."""
    if n_paths <= 0:
        return []
    full, rest = divmod(n_paths, block_size)
    sizes = [block_size] * full
    if rest:
        sizes.append(rest)
    return sizes


def map_blocks(
    fn: Callable[[np.random.Generator, int, int], BlockResult],
    n_paths: int,
    seed: int,
    key: Sequence[int] = (),
    threads: int = 1,
    block_size: int = BLOCK_SIZE,
) -> BlockResult:
    """
    Evaluate fn on every block and concatenate results in block order.

    Args:
        fn: Callable (rng, size, block_index) returning an array with
            `size` rows, or a dict of such arrays
        n_paths: Total number of paths
        seed: Base seed
        key: Integers identifying the stream (experiment, rung, ...)
        threads: Worker threads; does not affect the result
        block_size: Paths per block

    Returns:
        Concatenated array, or dict of concatenated arrays
    """
    sizes = block_sizes(n_paths, block_size)

    def _run(block: int) -> BlockResult:
        return fn(block_rng(seed, key, block), sizes[block], block)

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_run, range(len(sizes))))
    else:
        parts = [_run(b) for b in range(len(sizes))]

    logger.debug("Evaluated %d blocks (%d paths, key=%s)", len(sizes), n_paths, tuple(key))

    if not parts:
        return np.empty(0)
    if isinstance(parts[0], dict):
        return {name: np.concatenate([p[name] for p in parts], axis=0) for name in parts[0]}
    return np.concatenate(parts, axis=0)
