"""
Convergence checkers for sequences X_n: trend verdicts on n-ladders,
the Pearson-target moment conditions, polynomial-g* moment matching and
the fixed-chaos criteria.
"""

import logging
import math
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from ..chaos.kernels import ChaosVector, SymmetricKernel
from ..chaos.sampling import sample_with_gradient
from ..errors import InvalidParams, MomentUndefined
from ..laws.pearson import PearsonParams, pearson_gz_stats, pearson_moment

logger = logging.getLogger(__name__)

BAND = 3.0


def _mean_se(values: np.ndarray):
    values = np.asarray(values, dtype=float)
    return float(np.mean(values)), float(np.std(values, ddof=1) / math.sqrt(len(values)))


def sample_moments(x, max_order: int = 4) -> Dict[int, Dict[str, float]]:
    """{k: {"value", "stderr"}} for E[X^k], k = 1..max_order."""
    x = np.asarray(x, dtype=float)
    out = {}
    for k in range(1, max_order + 1):
        value, se = _mean_se(x ** k)
        out[k] = {"value": value, "stderr": se}
    return out


def trend_verdict(ns: Sequence[float], values: Sequence[float], stderr: Optional[Sequence[float]] = None) -> Dict[str, Any]:
    """
    Decide whether a non-negative quantity decreases along an n-ladder.

    Least-squares slope of log(value) on log(n), plus a sign test on
    consecutive pairs: a pair counts as decreasing unless the later value
    exceeds the earlier one by more than two joint standard errors.
    Values that reach zero count as converged.
    """
    ns = np.asarray(ns, dtype=float)
    values = np.abs(np.asarray(values, dtype=float))
    se = np.zeros_like(values) if stderr is None else np.asarray(stderr, dtype=float)
    if len(values) < 2:
        raise InvalidParams("trend needs at least two rungs")
    pairs = [
        values[i + 1] <= values[i] + 2.0 * math.hypot(se[i], se[i + 1])
        for i in range(len(values) - 1)
    ]
    if np.all(values[1:] <= 1e-12):
        slope = -math.inf
    else:
        positive = values > 0
        if positive.sum() >= 2:
            slope = float(stats.linregress(np.log(ns[positive]), np.log(values[positive])).slope)
        else:
            slope = -math.inf
    return {
        "slope": slope,
        "decreasing_pairs": int(sum(pairs)),
        "pairs": len(pairs),
        "converging": bool(slope < 0 and all(pairs)),
    }


def _target_row(name: str, n: float, value: float, se: float, target: float) -> Dict[str, Any]:
    return {
        "n": n,
        "quantity": name,
        "value": value,
        "stderr": se,
        "target": target,
        "distance": abs(value - target),
        "within_band": abs(value - target) <= BAND * se + 1e-12,
    }


def pearson_convergence_check(params: PearsonParams, rows: List[Dict[str, Any]]) -> Dict[str, Any]:
    """
    Check the moment conditions for X_n → Pearson(α, β, γ).

    Each row carries n and estimates m2, m3, m4, var_g with *_se
    standard errors. Cases: α = β = 0 needs Var g_{X_n} → 0; α = 0 needs
    Var g → β²γ and E[X³] → 2βγ; α ≠ 0 needs E[X³], E[X⁴] and Var g to
    reach their Pearson values. E[X_n²] → γ/(1 − α) is checked first.

    Returns:
        Dict with case, table (one row per rung and quantity) and
        verdicts per quantity
    """
    a, b, c = params.as_tuple()
    targets = {"m2": pearson_moment(params, 2)}
    if a == 0.0 and b == 0.0:
        case = "normal"
        targets["var_g"] = 0.0
    elif a == 0.0:
        case = "gamma"
        targets["var_g"] = b * b * c
        targets["m3"] = 2.0 * b * c
    else:
        case = "pearson"
        targets["m3"] = pearson_moment(params, 3)
        targets["m4"] = pearson_moment(params, 4)
        targets["var_g"] = pearson_gz_stats(params)["var_gz"]

    table = []
    verdicts: Dict[str, bool] = {}
    ns = [row["n"] for row in rows]
    for name, target in targets.items():
        distances = []
        ses = []
        for row in rows:
            entry = _target_row(name, row["n"], row[name], row.get(f"{name}_se", 0.0), target)
            table.append(entry)
            distances.append(entry["distance"])
            ses.append(entry["stderr"])
        last_ok = table[-1]["within_band"]
        if len(rows) >= 2:
            trend = trend_verdict(ns, distances, ses)
            verdicts[name] = bool(last_ok or trend["converging"])
        else:
            verdicts[name] = bool(last_ok)
    variance_ok = verdicts.pop("m2")
    verdicts = {"variance": variance_ok, **verdicts}
    logger.info("Pearson check (%s case): %s", case, verdicts)
    return {"case": case, "targets": targets, "table": table, "verdicts": verdicts}


def polynomial_gstar_check(coeffs: Sequence[float], moments: Dict[int, Dict[str, float]]) -> Dict[str, Any]:
    """
    For a target whose g* is the polynomial Σ a_j z^j (degree m ≤ 2),
    check E[X^k] → E[Z^k] for k = 1..max(2m, m + 2).

    Raises:
        MomentUndefined: If a required moment estimate is missing, the
            degree exceeds 2, or a target moment is infinite
    """
    coeffs = list(coeffs)
    while len(coeffs) > 1 and coeffs[-1] == 0.0:
        coeffs.pop()
    m = len(coeffs) - 1
    if m > 2:
        raise MomentUndefined(f"no centered law has a polynomial g* of degree {m}")
    padded = coeffs + [0.0] * (3 - len(coeffs))
    params = PearsonParams(alpha=padded[2], beta=padded[1], gamma=padded[0])
    needed = max(2 * m, m + 2)
    missing = [k for k in range(1, needed + 1) if k not in moments]
    if missing:
        raise MomentUndefined(f"moment estimates missing for k in {missing}")
    rows = []
    for k in range(1, needed + 1):
        target = pearson_moment(params, k)
        est = moments[k]
        rows.append(_target_row(f"E[X^{k}]", k, est["value"], est.get("stderr", 0.0), target))
    return {"degree": m, "orders": needed, "rows": rows, "verdict": all(r["within_band"] for r in rows)}


# -- fixed-chaos criteria -------------------------------------------------------

def _chaos_draws(kernel: SymmetricKernel, n_paths: int, seed: int, threads: int = 1) -> Dict[str, np.ndarray]:
    return sample_with_gradient(ChaosVector.single(kernel), n_paths, seed, threads=threads, key=(41, kernel.order))


def gamma_chaos_check(
    q: int, kernel: SymmetricKernel, v: float = 1.0, n_paths: int = 50_000, seed: int = 0, threads: int = 1
) -> Dict[str, float]:
    """E|‖DX‖² − 2qX − 2qv| for X = I_q(f); → 0 iff X → centered Gamma/χ² target."""
    if kernel.order != q:
        raise InvalidParams(f"kernel order {kernel.order} declared as {q}")
    draws = _chaos_draws(kernel, n_paths, seed, threads)
    value, se = _mean_se(np.abs(draws["dx_norm_sq"] - 2 * q * draws["x"] - 2 * q * v))
    return {"l1": value, "stderr": se, "target": 0.0}


def pearson_chaos_check(q: int, params: PearsonParams, x, dx_norm_sq) -> Dict[str, float]:
    """E|‖DX‖² − q(αX² + βX + γ)| from paired samples."""
    x = np.asarray(x, dtype=float)
    value, se = _mean_se(np.abs(np.asarray(dx_norm_sq) - q * params.gstar(x)))
    return {"l1": value, "stderr": se, "target": 0.0}


def chaos_gstar_moment_check(q: int, params: PearsonParams, dx_norm_sq) -> Dict[str, float]:
    """E‖DX‖⁴ against q²·E[g_Z²]."""
    value, se = _mean_se(np.asarray(dx_norm_sq, dtype=float) ** 2)
    target = q * q * pearson_gz_stats(params)["e_gz_sq"]
    return {"value": value, "stderr": se, "target": target, "within_band": abs(value - target) <= BAND * se + 1e-12}
