"""
Empirical derivative-bound constants.

k̂₁ = max ‖f′‖_∞ / ‖h′‖_∞ over a random family of Lipschitz test
functions, and k̂₂ likewise for f″ on full-line laws. These are lower
estimates of the law's constant, never the minimal constant itself.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, Optional

import numpy as np

from ..errors import AssumptionViolation
from ..laws.calculus import check_assumptions
from ..laws.catalog import ReferenceLaw
from ..parallel import block_rng
from .functions import random_family
from .solver import solve

logger = logging.getLogger(__name__)

STREAM_TEST_FUNCTIONS = 11

# Known k₁ for the standard normal: 1 over Lipschitz h, 4 over bounded-Lipschitz h.
NORMAL_K_W = 1.0
NORMAL_K_FM = 4.0

DEFAULT_FAMILY = {"family": "W", "n_functions": 50, "grid_n": 200, "seed": 0, "threads": 1}


def bound_constant(law: ReferenceLaw, family_spec: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """
    Sweep a random test-function family and record the largest
    derivative ratios.

    Args:
        law: Target law (must pass Assumptions A and B)
        family_spec: {"family": "W"|"FM", "n_functions", "grid_n", "seed", "threads"}

    Returns:
        Dict with k1_hat, k2_hat (None unless the support is the full
        line and B′ holds), worst_h, worst_h2, grid_n, family,
        max_residual

    Raises:
        AssumptionViolation: If Assumption A or B fails
    """
    spec = {**DEFAULT_FAMILY, **(family_spec or {})}
    audit = check_assumptions(law)
    if not (audit["A"] and audit["B"]):
        raise AssumptionViolation(f"{law.law_id}: Assumption A={audit['A']} B={audit['B']}")
    want_k2 = law.support.full_line and bool(audit["Bprime"])

    rng = block_rng(int(spec["seed"]), (STREAM_TEST_FUNCTIONS,), 0)
    family = random_family(rng, int(spec["n_functions"]), spec["family"], scale=math.sqrt(law.variance))

    def _ratios(h):
        sol = solve(law, h, int(spec["grid_n"]))
        norm = h.derivative_sup
        k1 = float(np.nanmax(np.abs(sol.f_prime))) / norm
        k2 = float(np.nanmax(np.abs(sol.f_second))) / norm if want_k2 else None
        return k1, k2, sol.max_residual

    threads = int(spec["threads"])
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_ratios, family))
    else:
        results = [_ratios(h) for h in family]

    k1 = np.array([r[0] for r in results])
    best = int(np.argmax(k1))
    out: Dict[str, Any] = {
        "law": law.law_id,
        "family": spec["family"],
        "grid_n": int(spec["grid_n"]),
        "k1_hat": float(k1[best]),
        "worst_h": family[best].name,
        "k2_hat": None,
        "worst_h2": None,
        "max_residual": float(max(r[2] for r in results)),
    }
    if want_k2:
        k2 = np.array([r[1] for r in results])
        best2 = int(np.argmax(k2))
        out["k2_hat"] = float(k2[best2])
        out["worst_h2"] = family[best2].name
    logger.info("%s %s family: k1_hat=%.4f k2_hat=%s", law.law_id, spec["family"], out["k1_hat"], out["k2_hat"])
    return out


def bound_stability(law: ReferenceLaw, family_spec: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """k̂₁ at grid_n and 2·grid_n; drift is the relative increase."""
    spec = {**DEFAULT_FAMILY, **(family_spec or {})}
    coarse = bound_constant(law, spec)
    fine = bound_constant(law, {**spec, "grid_n": 2 * int(spec["grid_n"])})
    drift = (fine["k1_hat"] - coarse["k1_hat"]) / coarse["k1_hat"]
    return {"coarse": coarse, "fine": fine, "drift": drift}
