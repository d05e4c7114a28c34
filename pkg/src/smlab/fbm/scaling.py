"""
Scaling of products of fGn covariances.

For P time variables and exponents ε_ij ≥ 0 on pairs with S = Σε_ij,
L(T) = T^{−PH} ∫_{[0,T]^P} Π |C(s_i − s_j)|^{ε_ij} ds. Since |C(t)|
decays like t^{2H−2}, log L(T) grows at most with slope
−(1 − H)(2S − P) in log T; it stays bounded for S = P/2 and vanishes
for S > P/2. The integral is estimated by scrambled Sobol points.
"""

import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.stats import qmc

from ..errors import CapExceeded, InvalidParams
from ..parallel import block_rng
from .fgn import fgn_covariance

logger = logging.getLogger(__name__)

ALLOWED_P = (4, 6, 8)
MAX_POINTS_LOG2 = 20
MAX_RUNGS = 12
SLOPE_SLACK = 0.15
STREAM_SCALING = 63

Exponents = Dict[Tuple[int, int], float]


def _normalize(exponents) -> Exponents:
    if isinstance(exponents, dict):
        items = exponents.items()
    else:
        items = (((int(i), int(j)), float(e)) for i, j, e in exponents)
    out: Exponents = {}
    for (i, j), e in items:
        if i == j:
            raise InvalidParams(f"pair ({i}, {j}) must join two distinct variables")
        if e < 0:
            raise InvalidParams(f"exponent {e} on ({i}, {j}) is negative")
        key = (min(i, j), max(i, j))
        out[key] = out.get(key, 0.0) + float(e)
    return out


def envelope_slope(hurst: float, P: int, S: float) -> float:
    """−(1 − H)(2S − P)."""
    return -(1.0 - hurst) * (2.0 * S - P)


def scaled_integral(hurst: float, exponents: Exponents, P: int, T: float, points: np.ndarray) -> Tuple[float, float]:
    """L(T) and its standard error from points in [0, 1]^P."""
    s = points * T
    integrand = np.ones(len(points))
    for (i, j), e in exponents.items():
        if e:
            integrand *= np.abs(fgn_covariance(hurst, s[:, i] - s[:, j])) ** e
    scale = T ** (P * (1.0 - hurst))
    return scale * float(np.mean(integrand)), scale * float(np.std(integrand, ddof=1) / math.sqrt(len(points)))


def lt_scaling_probe(
    hurst: float,
    exponents,
    T_list: Sequence[float],
    P: Optional[int] = None,
    log2_points: int = 14,
    seed: int = 0,
    slack: float = SLOPE_SLACK,
) -> Dict[str, Any]:
    """
    Fit the decay slope of L(T) and compare it with the envelope.

    Args:
        hurst: Hurst index in (1/2, 1)
        exponents: {(i, j): ε} or [(i, j, ε), ...] over variables 0..P−1
        T_list: Horizons (at least two)
        P: Number of variables (default: inferred from the pairs)
        log2_points: Sobol sample size is 2**log2_points
        seed: Scrambling seed
        slack: Tolerance added to the envelope

    Raises:
        InvalidParams: If P is not 4, 6 or 8 or S < 1
        CapExceeded: If the sample size or ladder is too large
    """
    exps = _normalize(exponents)
    if P is None:
        P = max(max(pair) for pair in exps) + 1 if exps else 0
    if P not in ALLOWED_P:
        raise InvalidParams(f"P must be one of {ALLOWED_P}, got {P}")
    if any(j >= P for _, j in exps):
        raise InvalidParams(f"pair index outside 0..{P - 1}")
    S = sum(exps.values())
    if S < 1:
        raise InvalidParams("exponent sum S must be at least 1")
    if not 0.5 < hurst < 1.0:
        raise InvalidParams(f"Hurst index must lie in (1/2, 1), got {hurst}")
    if log2_points > MAX_POINTS_LOG2 or len(T_list) > MAX_RUNGS:
        raise CapExceeded(f"probe limited to 2^{MAX_POINTS_LOG2} points and {MAX_RUNGS} horizons")
    if len(T_list) < 2:
        raise InvalidParams("need at least two horizons to fit a slope")

    sampler = qmc.Sobol(d=P, scramble=True, seed=block_rng(seed, (STREAM_SCALING, P), 0))
    points = sampler.random_base2(m=log2_points)
    values, errors = [], []
    for T in T_list:
        v, e = scaled_integral(hurst, exps, P, float(T), points)
        values.append(v)
        errors.append(e)
    fit = stats.linregress(np.log(np.asarray(T_list, dtype=float)), np.log(values))
    envelope = envelope_slope(hurst, P, S)
    result = {
        "P": P,
        "S": S,
        "exponents": [[i, j, e] for (i, j), e in sorted(exps.items())],
        "T": [float(t) for t in T_list],
        "L": values,
        "L_se": errors,
        "slope": float(fit.slope),
        "envelope": envelope,
        "within_envelope": bool(fit.slope <= envelope + slack),
        "bounded": bool(fit.slope <= slack) if 2 * S == P else None,
        "vanishing": bool(fit.slope < 0) if 2 * S > P else None,
    }
    logger.info("P=%d S=%g: slope %.3f (envelope %.3f)", P, S, fit.slope, envelope)
    return result


def random_exponents(rng: np.random.Generator, P: int, S: int) -> Exponents:
    """
    Unit exponents on S edges of a random spanning tree.

    On a forest no cluster of variables dominates the integral.
    """
    if not 1 <= S <= P - 1:
        raise InvalidParams(f"a forest on {P} variables has 1..{P - 1} edges, got S={S}")
    order = rng.permutation(P)
    tree = [(int(order[k]), int(order[rng.integers(k)])) for k in range(1, P)]
    chosen = rng.choice(len(tree), size=S, replace=False)
    return {(min(tree[k]), max(tree[k])): 1.0 for k in (int(c) for c in chosen)}


def envelope_sweep(
    hurst: float,
    P: int,
    T_list: Sequence[float],
    n_sets: int = 5,
    seed: int = 0,
    log2_points: int = 12,
) -> List[Dict[str, Any]]:
    """Probe n_sets random forest exponent sets with P/2 ≤ S ≤ P − 1."""
    rng = block_rng(seed, (STREAM_SCALING, P, 1), 0)
    out = []
    for k in range(n_sets):
        S = int(rng.integers(P // 2, P))
        out.append(lt_scaling_probe(hurst, random_exponents(rng, P, S), T_list, P=P, log2_points=log2_points, seed=seed + k))
    return out
