"""
Distance bounds between a sample law and a reference law.

All bounds compare g*(X) with Y = ⟨DX, −DL⁻¹X⟩ (or with its regression
ĝ(X) ≈ g_X). The derivative-bound constant k comes from the Stein sweep
unless the caller supplies it.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from ..errors import AssumptionViolation, MomentUndefined, NumericError
from ..laws.catalog import ReferenceLaw
from ..laws.pearson import gstar_polynomial_moments
from ..malliavin.functional import GammaSamples
from ..malliavin.regression import conditional_regress
from ..stein.bounds import NORMAL_K_FM, NORMAL_K_W, bound_constant
from .distances import wasserstein1_empirical, wasserstein1_floor

logger = logging.getLogger(__name__)


def _mean_se(values: np.ndarray):
    values = np.asarray(values, dtype=float)
    return float(np.mean(values)), float(np.std(values, ddof=1) / math.sqrt(len(values)))


@dataclass
class BoundReport:
    """Every variant of the distance bound for one (law, sample set) pair."""

    law_id: str
    n_paths: int
    k_used: float
    k_source: str
    d_w_empirical: float
    d_w_floor: float
    np_l1: float
    np_l1_se: float
    np_l1_regressed: float
    np_l1_regressed_se: float
    np_l2: float
    moment_bound: Optional[float] = None
    moment_terms: Dict[str, float] = field(default_factory=dict)
    regression: Dict[str, Any] = field(default_factory=dict)

    @property
    def bound(self) -> float:
        return self.k_used * self.np_l1

    @property
    def sandwich_ok(self) -> bool:
        """d_W ≤ k·np_l1 + 3·(k·stderr + noise floor of d_W)."""
        slack = 3.0 * (self.k_used * self.np_l1_se + self.d_w_floor)
        return self.d_w_empirical <= self.bound + slack

    @property
    def jensen_ok(self) -> bool:
        slack = 2.0 * math.hypot(self.np_l1_se, self.np_l1_regressed_se)
        return self.np_l1_regressed <= self.np_l1 + slack

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["bound"] = self.bound
        out["sandwich_ok"] = self.sandwich_ok
        out["jensen_ok"] = self.jensen_ok
        return out


def resolve_k(law: ReferenceLaw, family_spec: Optional[Dict[str, Any]] = None):
    """
    (k, source): the known Normal constant, else the empirical sweep.

    Raises:
        AssumptionViolation: If the law fails Assumption A or B
    """
    if law.name == "normal":
        return NORMAL_K_W / math.sqrt(law.variance), "normal_closed_form"
    swept = bound_constant(law, family_spec)
    return swept["k1_hat"], f"sweep({swept['family']},n={swept['grid_n']})"


def np_estimate(
    law: ReferenceLaw,
    gamma: GammaSamples,
    k: Optional[float] = None,
    family_spec: Optional[Dict[str, Any]] = None,
    regress_spec: Optional[Dict[str, Any]] = None,
) -> BoundReport:
    """
    Estimate d_W(X, Z) and the bounds k·E|g*(X) − Y|, k·E|g*(X) − ĝ(X)|
    and k·√E[(g*(X) − ĝ(X))²].

    Raises:
        AssumptionViolation: If k must be swept and the law fails A or B
        TooFewSamples: Below 1000 samples
    """
    if k is None:
        k, source = resolve_k(law, family_spec)
    else:
        source = "caller"
    if not (k > 0 and math.isfinite(k)):
        raise AssumptionViolation(f"derivative-bound constant k={k} is not usable")

    x = np.asarray(gamma.x, dtype=float)
    g_x = law.gstar(x)
    raw = np.abs(g_x - gamma.y)
    l1, l1_se = _mean_se(raw)

    spec = dict(regress_spec or {})
    method = spec.pop("method", "bins")
    fit = conditional_regress(gamma, method, spec)
    g_hat = fit(x)
    reg = np.abs(g_x - g_hat)
    l1_reg, l1_reg_se = _mean_se(reg)

    report = BoundReport(
        law_id=law.law_id,
        n_paths=len(x),
        k_used=float(k),
        k_source=source,
        d_w_empirical=wasserstein1_empirical(x, law),
        d_w_floor=wasserstein1_floor(law, len(x)),
        np_l1=l1,
        np_l1_se=l1_se,
        np_l1_regressed=l1_reg,
        np_l1_regressed_se=l1_reg_se,
        np_l2=math.sqrt(float(np.mean(reg ** 2))),
        regression={"method": fit.method, "groups": int(len(fit.g_hat))},
    )
    try:
        mb = moment_bound(law, x, g_hat, k=k)
        report.moment_bound = mb["bound"]
        report.moment_terms = mb["terms"]
    except MomentUndefined as exc:
        logger.info("%s: moment bound skipped (%s)", law.law_id, exc)
    logger.info(
        "%s: d_W=%.4g  k*np_l1=%.4g (k=%.4g, %s)", law.law_id, report.d_w_empirical, report.bound, k, source
    )
    return report


def z_side_moments(law: ReferenceLaw) -> Dict[str, float]:
    """
    E[g*(Z)²] and E[Z·G*(Z)]; closed forms for Pearson laws, quadrature
    otherwise. Both equal E[g_Z²].

    Raises:
        MomentUndefined: If the moments are infinite
    """
    if law.pearson is not None:
        closed = gstar_polynomial_moments(law.pearson)
        return {"gstar_sq": closed["e_gstar_sq"], "x_Gstar": closed["e_z_Gstar"]}
    try:
        gstar_sq = law.expect(lambda z: law.gstar(z) ** 2)
        z_gstar = law.expect(lambda z: z * law.Gstar(z))
    except NumericError as exc:
        raise MomentUndefined(f"{law.law_id}: Z-side moments by quadrature failed ({exc})") from exc
    if not (math.isfinite(gstar_sq) and math.isfinite(z_gstar)):
        raise MomentUndefined(f"{law.law_id}: E[g*(Z)^2] is not finite")
    return {"gstar_sq": gstar_sq, "x_Gstar": z_gstar}


def moment_bound(law: ReferenceLaw, x, g_x, k: float = 1.0) -> Dict[str, Any]:
    """
    k·√(|E[g*(X)²] − E[g*(Z)²]| + |E[XG*(X)] − E[ZG*(Z)]| + |E[g_X²] − E[g_Z²]|).

    Args:
        law: Target law
        x: Samples of X
        g_x: Values of g_X at the samples (regressed or exact)
        k: Derivative-bound constant

    Raises:
        MomentUndefined: If a Z-side moment is infinite
    """
    x = np.asarray(x, dtype=float)
    g_x = np.asarray(g_x, dtype=float)
    z_side = z_side_moments(law)
    z_side["gx_sq"] = z_side["gstar_sq"]
    x_side = {
        "gstar_sq": float(np.mean(law.gstar(x) ** 2)),
        "x_Gstar": float(np.mean(x * law.Gstar(x))),
        "gx_sq": float(np.mean(g_x ** 2)),
    }
    terms = {name: abs(x_side[name] - z_side[name]) for name in x_side}
    bound = k * math.sqrt(sum(terms.values()))
    return {"bound": bound, "terms": terms, "x_side": x_side, "z_side": z_side}


@dataclass
class CharacterizationReport:
    """The three moment conditions characterizing the law of X."""

    law_id: str
    cond1: float
    cond2: float
    cond3: float
    tolerances: Dict[str, float]

    @property
    def verdict(self) -> bool:
        return (
            self.cond1 <= self.tolerances["cond1"]
            and self.cond2 <= self.tolerances["cond2"]
            and self.cond3 <= self.tolerances["cond3"]
        )

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["verdict"] = self.verdict
        return out


def characterize(law: ReferenceLaw, x, g_x, tol: Optional[Dict[str, float]] = None) -> CharacterizationReport:
    """
    Check E[g*(X)²] = E[g*(Z)²], E[XG*(X)] = E[ZG*(Z)] and
    E[g_X²] = E[g_Z²]. Default tolerances are three standard errors of
    the X-side estimates.
    """
    x = np.asarray(x, dtype=float)
    g_x = np.asarray(g_x, dtype=float)
    mb = moment_bound(law, x, g_x)
    if tol is None:
        tol = {
            "cond1": 3.0 * _mean_se(law.gstar(x) ** 2)[1],
            "cond2": 3.0 * _mean_se(x * law.Gstar(x))[1],
            "cond3": 3.0 * _mean_se(g_x ** 2)[1],
        }
    return CharacterizationReport(
        law_id=law.law_id,
        cond1=mb["terms"]["gstar_sq"],
        cond2=mb["terms"]["x_Gstar"],
        cond3=mb["terms"]["gx_sq"],
        tolerances={k: float(v) for k, v in tol.items()},
    )
