"""
The bilinear fGn functional and its moment ladder.

For a subordinator f with Hermite rank one,
H_T = T^{−H} Σ_{s<T} (f(X_s) − E f(Z)), F̃_T = H_T²/Σ² and
F_T = F̃_T − E[F̃_T], whose moments approach those of the centered χ²₁:
E[F²] → 2, E[F³] → 8, E[F⁴] → 60.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from numpy.polynomial import hermite_e

from ..errors import InvalidParams, QuadratureFailure, SigmaZero
from ..npbound.checks import trend_verdict
from .fgn import FgnConfig, fgn_covariance, integrated_covariance_ratio, map_fgn

logger = logging.getLogger(__name__)

TARGETS = {"m2": 2.0, "m3": 8.0, "m4": 60.0}
DEFAULT_ORDER = 8
QUAD_NODES = 80
QUAD_TOL = 1e-10
STREAM_FT = 62


@dataclass(frozen=True)
class Subordinator:
    """A subordination function f with its derivative."""

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]


SUBORDINATORS: Dict[str, Subordinator] = {
    "identity": Subordinator("identity", lambda x: x, lambda x: np.ones_like(x)),
    "cubic": Subordinator("cubic", lambda x: x + x ** 3 / 10.0, lambda x: 1.0 + 0.3 * x ** 2),
    "cube": Subordinator("cube", lambda x: x ** 3, lambda x: 3.0 * x ** 2),
    "square": Subordinator("square", lambda x: x ** 2, lambda x: 2.0 * x),
}


def get_subordinator(name: str) -> Subordinator:
    if name not in SUBORDINATORS:
        raise InvalidParams(f"unknown subordinator '{name}'; choose from {sorted(SUBORDINATORS)}")
    return SUBORDINATORS[name]


def _gauss_expect(fn: Callable[[np.ndarray], np.ndarray], nodes: int) -> Callable[[int], float]:
    x, w = hermite_e.hermegauss(nodes)
    w = w / math.sqrt(2.0 * math.pi)
    fx = fn(x)

    def _coef(q: int) -> float:
        basis = hermite_e.hermeval(x, [0.0] * q + [1.0])
        return float(np.sum(w * basis * fx)) / math.factorial(q)

    return _coef


def hermite_coeffs(f: Callable[[np.ndarray], np.ndarray], Q: int = DEFAULT_ORDER, quad_spec: Optional[Dict[str, Any]] = None) -> Dict[int, float]:
    """
    c_q = E[He_q(Z)f(Z)]/q! for q ≤ Q by Gauss–Hermite quadrature.

    The rule is run at n and 2n nodes; the coefficients must agree.

    Raises:
        QuadratureFailure: If the two rules disagree beyond the tolerance
    """
    spec = {"nodes": QUAD_NODES, "tol": QUAD_TOL, **(quad_spec or {})}
    nodes, tol = int(spec["nodes"]), float(spec["tol"])
    coarse = _gauss_expect(f, nodes)
    fine = _gauss_expect(f, 2 * nodes)
    out = {}
    for q in range(Q + 1):
        a, b = coarse(q), fine(q)
        if abs(a - b) > tol * max(1.0, abs(b)):
            raise QuadratureFailure(f"Hermite coefficient c_{q} unstable: {a:.6g} vs {b:.6g}")
        out[q] = 0.0 if abs(b) < tol else b
    return out


def expansion_is_complete(f: Callable[[np.ndarray], np.ndarray], coeffs: Dict[int, float], nodes: int = QUAD_NODES) -> bool:
    """Σ_q q!c_q² accounts for E[f(Z)²]."""
    second = _gauss_expect(lambda x: f(x) ** 2, 2 * nodes)(0)
    captured = sum(math.factorial(q) * c * c for q, c in coeffs.items())
    return abs(second - captured) <= 1e-8 * max(1.0, second)


def exact_second_moment(hurst: float, T: int, coeffs: Dict[int, float]) -> float:
    """E[H_T²] = T^{−2H} Σ_{s,t} Σ_{q≥1} q!c_q²C(s − t)^q."""
    k = np.arange(1, T)
    cov = fgn_covariance(hurst, k)
    total = 0.0
    for q, c in coeffs.items():
        if q == 0 or c == 0.0:
            continue
        total += math.factorial(q) * c * c * (T + 2.0 * float(np.sum((T - k) * cov ** q)))
    return total / T ** (2.0 * hurst)


def sigma_squared(c1: float, hurst: float, T: int, convention: str = "grid") -> float:
    """Σ² = c₁²κ_T on the unit-step grid, or 2c₁²."""
    if convention == "grid":
        return c1 * c1 * integrated_covariance_ratio(hurst, T)
    if convention == "asymptotic":
        return 2.0 * c1 * c1
    raise InvalidParams(f"unknown sigma convention '{convention}'")


@dataclass
class FunctionalSamples:
    """Samples of F_T with the ingredients used to build them."""

    T: int
    values: np.ndarray
    tilde: np.ndarray
    mean_tilde: float
    centering: str
    sigma2: float
    coeffs: Dict[int, float] = field(default_factory=dict)


def _h_statistic(paths: np.ndarray, f: Callable[[np.ndarray], np.ndarray], c0: float, hurst: float) -> np.ndarray:
    T = paths.shape[1]
    return np.sum(f(paths) - c0, axis=1) / T ** hurst


def functional_FT(
    paths: np.ndarray,
    f: Callable[[np.ndarray], np.ndarray],
    hurst: float,
    convention: str = "grid",
    centering: str = "exact",
    Q: int = DEFAULT_ORDER,
) -> FunctionalSamples:
    """
    F_T from a matrix of fGn paths (paths × T).

    centering="exact" uses E[H_T²] from the Hermite expansion when it
    captures all of E[f(Z)²]; otherwise, or with centering="ensemble",
    the mean of F̃_T across the given paths is used and flagged.

    Raises:
        SigmaZero: If c₁ = E[Zf(Z)] vanishes
    """
    coeffs = hermite_coeffs(f, Q)
    h = _h_statistic(np.asarray(paths, dtype=float), f, coeffs[0], hurst)
    return _finish(h, f, coeffs, hurst, paths.shape[1], convention, centering)


def _finish(h, f, coeffs, hurst, T, convention, centering) -> FunctionalSamples:
    c1 = coeffs.get(1, 0.0)
    if c1 == 0.0:
        raise SigmaZero("E[Z f(Z)] = 0: the limit variance Σ² vanishes")
    sigma2 = sigma_squared(c1, hurst, T, convention)
    tilde = h ** 2 / sigma2
    if centering == "exact" and expansion_is_complete(f, coeffs):
        mean_tilde = exact_second_moment(hurst, T, coeffs) / sigma2
        used = "exact"
    elif centering in ("exact", "ensemble"):
        mean_tilde = float(np.mean(tilde))
        used = "ensemble"
        if centering == "exact":
            logger.info("Hermite expansion truncated; centering F_T by the ensemble mean")
    else:
        raise InvalidParams(f"unknown centering '{centering}'")
    return FunctionalSamples(T, tilde - mean_tilde, tilde, mean_tilde, used, sigma2, coeffs)


def sample_FT(
    config: FgnConfig,
    T: int,
    n_paths: Optional[int] = None,
    threads: int = 1,
    convention: str = "grid",
    centering: str = "exact",
    method: str = "auto",
) -> FunctionalSamples:
    """Simulate F_T block by block without storing the fGn paths."""
    sub = get_subordinator(config.f_choice)
    coeffs = hermite_coeffs(sub.f, DEFAULT_ORDER)
    if coeffs.get(1, 0.0) == 0.0:
        raise SigmaZero(f"subordinator '{sub.name}' has E[Z f(Z)] = 0")
    n_paths = n_paths or config.n_paths
    h = map_fgn(
        config.hurst,
        T,
        n_paths,
        config.seed,
        lambda paths: _h_statistic(paths, sub.f, coeffs[0], config.hurst),
        threads=threads,
        method=method,
        key=(STREAM_FT,),
    )
    return _finish(h, sub.f, coeffs, config.hurst, T, convention, centering)


def _mean_se(values: np.ndarray):
    return float(np.mean(values)), float(np.std(values, ddof=1) / math.sqrt(len(values)))


@dataclass
class MomentLadder:
    """Per-T moment estimates of F_T, ordered by T."""

    hurst: float
    f_choice: str
    rows: List[Dict[str, Any]] = field(default_factory=list)

    def add(self, samples: FunctionalSamples) -> Dict[str, Any]:
        row: Dict[str, Any] = {"T": samples.T}
        for k in (2, 3, 4):
            value, se = _mean_se(samples.values ** k)
            row[f"m{k}"] = value
            row[f"m{k}_se"] = se
        row["mean_tilde"] = samples.mean_tilde
        row["centering"] = samples.centering
        row["kappa"] = integrated_covariance_ratio(self.hurst, samples.T)
        self.rows.append(row)
        self.rows.sort(key=lambda r: r["T"])
        return row

    def verdicts(self, bands: float = 3.0) -> Dict[str, bool]:
        """
        Per moment: the last rung lies within `bands` standard errors of
        its target, or the distance to the target shrinks along the ladder.
        """
        out = {}
        ns = [r["T"] for r in self.rows]
        for name, target in TARGETS.items():
            dist = [abs(r[name] - target) for r in self.rows]
            ses = [r[f"{name}_se"] for r in self.rows]
            last_ok = dist[-1] <= bands * ses[-1]
            trend = trend_verdict(ns, dist, ses)["converging"] if len(self.rows) >= 2 else False
            out[name] = bool(last_ok or trend)
        return out

    def export_csv(self, path: str) -> str:
        """Wide CSV: T, m2, m2_se, m3, m3_se, m4, m4_se."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["T", "m2", "m2_se", "m3", "m3_se", "m4", "m4_se"])
            for r in self.rows:
                writer.writerow([r["T"], r["m2"], r["m2_se"], r["m3"], r["m3_se"], r["m4"], r["m4_se"]])
        return str(path)

    def export_long_csv(self, path: str) -> str:
        """Long CSV for plotting: T, quantity, value, stderr, target."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["T", "quantity", "value", "stderr", "target"])
            for r in self.rows:
                for name, target in TARGETS.items():
                    writer.writerow([r["T"], name, r[name], r[f"{name}_se"], target])
        return str(path)

    def to_dict(self) -> Dict[str, Any]:
        return {"hurst": self.hurst, "f_choice": self.f_choice, "targets": TARGETS, "rows": self.rows}


def moment_ladder(
    config: FgnConfig,
    T_list: Sequence[int],
    threads: int = 1,
    convention: str = "grid",
    centering: str = "exact",
    method: str = "auto",
) -> MomentLadder:
    """
    Estimate E[F_T^k], k = 2, 3, 4, for every T in T_list.

    Raises:
        CapExceeded: If a T exceeds the fGn step cap
        SigmaZero: If the subordinator has E[Zf(Z)] = 0
    """
    ladder = MomentLadder(config.hurst, config.f_choice)
    for T in sorted(T_list):
        samples = sample_FT(config, T, threads=threads, convention=convention, centering=centering, method=method)
        row = ladder.add(samples)
        logger.info(
            "T=%d: m2=%.3f±%.3f m3=%.3f±%.3f m4=%.2f±%.2f",
            T, row["m2"], row["m2_se"], row["m3"], row["m3_se"], row["m4"], row["m4_se"],
        )
    return ladder
