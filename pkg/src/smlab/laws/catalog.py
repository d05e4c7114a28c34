"""
Catalog of centered target laws.

Every law has mean zero on a support (l, u) with l < 0 < u, a density
ρ*, a CDF Φ and the Stein kernel g*(z) = ∫_z^u y ρ*(y) dy / ρ*(z) in
closed form. Distributions with a scipy counterpart delegate density,
CDF and quantiles to a frozen scipy.stats object shifted to mean zero.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize, special, stats

from ..errors import DomainError, InvalidParams, MomentUndefined, UnknownLaw
from ..numerics import integrate
from ..reports import write_csv
from .pearson import PearsonParams, pearson_moment

logger = logging.getLogger(__name__)

ArrayFn = Callable[[np.ndarray], np.ndarray]

# Interior grid margins: fraction of the support width at finite ends,
# quantile level and scale multiple at infinite ends.
EDGE_MARGIN = 1e-4
TAIL_LEVEL = 1e-8
TAIL_SCALES = 50.0


@dataclass(frozen=True)
class Support:
    """Open interval (lower, upper) containing 0; ends may be infinite."""

    lower: float
    upper: float

    def __post_init__(self):
        if not (self.lower < 0.0 < self.upper):
            raise InvalidParams(f"support ({self.lower}, {self.upper}) must contain 0 in its interior")

    @property
    def full_line(self) -> bool:
        return math.isinf(self.lower) and math.isinf(self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, z: float) -> bool:
        return self.lower < z < self.upper

    def mask(self, z: np.ndarray) -> np.ndarray:
        return (z > self.lower) & (z < self.upper)


class ReferenceLaw:
    """
    A centered target law with its g* calculus.

    Instances are immutable after construction and safe to share across
    threads. All point functions accept scalars or arrays; g*, G*, g*′
    and g*″ vanish outside the support.
    """

    def __init__(
        self,
        name: str,
        params: Dict[str, float],
        support: Support,
        density: ArrayFn,
        cdf: ArrayFn,
        ppf: Callable[[float], float],
        gstar: ArrayFn,
        gstar_prime: ArrayFn,
        gstar_second: Optional[ArrayFn] = None,
        pearson: Optional[PearsonParams] = None,
        Gstar: Optional[ArrayFn] = None,
        smoothing: Optional[Tuple[ArrayFn, ArrayFn]] = None,
        breakpoints: Sequence[float] = (),
        dist: Any = None,
    ):
        self.name = name
        self.params = dict(params)
        self.support = support
        self.pearson = pearson
        self.breakpoints = tuple(breakpoints)
        self.dist = dist
        self._density = density
        self._cdf = cdf
        self._ppf = ppf
        self._gstar = gstar
        self._gstar_prime = gstar_prime
        self._gstar_second = gstar_second
        self._Gstar = Gstar
        self._smoothing = smoothing

    def __repr__(self) -> str:
        return f"ReferenceLaw({self.name!r}, {self.params!r})"

    @property
    def law_id(self) -> str:
        args = ",".join(f"{k}={v:g}" for k, v in sorted(self.params.items()))
        return f"{self.name}({args})"

    # -- pointwise evaluation -------------------------------------------

    def _on_support(self, fn: ArrayFn, z, outside: float = 0.0):
        arr = np.asarray(z, dtype=float)
        out = np.full(arr.shape, outside, dtype=float)
        inside = self.support.mask(arr)
        if np.any(inside):
            out[inside] = fn(arr[inside])
        return out if arr.ndim else float(out)

    def density(self, z):
        return self._on_support(self._density, z)

    def cdf(self, z):
        arr = np.asarray(z, dtype=float)
        out = np.where(arr >= self.support.upper, 1.0, 0.0)
        inside = self.support.mask(arr)
        if np.any(inside):
            out[inside] = self._cdf(arr[inside])
        return out if arr.ndim else float(out)

    def sf(self, z):
        """Survival function 1 − Φ; uses the frozen scipy law when the law has one."""
        arr = np.asarray(z, dtype=float)
        out = np.where(arr <= self.support.lower, 1.0, 0.0)
        inside = self.support.mask(arr)
        if np.any(inside):
            if self.dist is not None:
                out[inside] = self.dist.sf(arr[inside])
            else:
                out[inside] = 1.0 - self._cdf(arr[inside])
        return out if arr.ndim else float(out)

    def ppf(self, q: float) -> float:
        return float(self._ppf(q))

    def gstar(self, z):
        return self._on_support(self._gstar, z)

    def gstar_prime(self, z):
        return self._on_support(self._gstar_prime, z)

    def gstar_second(self, z):
        if self._gstar_second is not None:
            return self._on_support(self._gstar_second, z)
        step = 1e-4

        def _fd(x):
            h = step * np.maximum(1.0, np.abs(x))
            return (self._gstar_prime(x + h) - self._gstar_prime(x - h)) / (2.0 * h)

        return self._on_support(_fd, z)

    def Gstar(self, z):
        """Antiderivative of g*, anchored at l for finite l and at 0 otherwise."""
        if self._Gstar is not None:
            return self._on_support(self._Gstar, z)
        anchor = self.anchor

        def _quad(x):
            return np.array(
                [integrate(self._gstar, anchor, float(xi), points=self.breakpoints, what="G*") for xi in x]
            )

        return self._on_support(_quad, z)

    @property
    def anchor(self) -> float:
        return self.support.lower if math.isfinite(self.support.lower) else 0.0

    def smoothing(self) -> Tuple[ArrayFn, ArrayFn]:
        """Return (g̃, g̃′): a C¹ stand-in for g* used by the Assumption B audit."""
        if self._smoothing is not None:
            return self._smoothing
        return self.gstar, self.gstar_prime

    # -- scalar summaries -----------------------------------------------

    @property
    def abs_mean(self) -> float:
        """E|Z| = 2 g*(0) ρ*(0)."""
        return 2.0 * self.gstar(0.0) * self.density(0.0)

    @property
    def variance(self) -> float:
        """E[Z²] = E[g*(Z)]."""
        return self.moment(2)

    def moment(self, k: int) -> float:
        """Raw moment E[Z^k]; Pearson laws use the moment recursion."""
        if self.pearson is not None:
            return pearson_moment(self.pearson, k)
        value = float(self.dist.moment(k))
        if not math.isfinite(value):
            raise MomentUndefined(f"{self.law_id}: E[Z^{k}] is not finite")
        return value

    def expect(self, fn: ArrayFn) -> float:
        """E[fn(Z)] by quadrature against ρ*."""
        return integrate(
            lambda y: float(fn(np.asarray(y))) * float(self._density(np.asarray(y))),
            self.support.lower,
            self.support.upper,
            points=self.breakpoints,
            what=f"E[h(Z)] under {self.law_id}",
        )

    def interior_grid(self, n: int = 200) -> np.ndarray:
        """
        n evenly spaced points inside the support, away from underflow.

        Finite ends keep a margin of EDGE_MARGIN times the support width;
        infinite ends stop at the TAIL_LEVEL quantile or TAIL_SCALES
        standard deviations, whichever is closer to 0.
        """
        lo, hi = self.support.lower, self.support.upper
        scale = math.sqrt(self.variance)
        width = self.support.width
        if math.isfinite(lo):
            left = max(lo + EDGE_MARGIN * (width if math.isfinite(width) else scale), self.ppf(TAIL_LEVEL))
        else:
            left = max(self.ppf(TAIL_LEVEL), -TAIL_SCALES * scale)
        if math.isfinite(hi):
            right = min(hi - EDGE_MARGIN * (width if math.isfinite(width) else scale), self.ppf(1.0 - TAIL_LEVEL))
        else:
            right = min(self.ppf(1.0 - TAIL_LEVEL), TAIL_SCALES * scale)
        return np.linspace(left, right, n)


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def _pearson_Gstar(p: PearsonParams, anchor: float) -> ArrayFn:
    def _poly(z):
        return p.alpha * z ** 3 / 3.0 + p.beta * z ** 2 / 2.0 + p.gamma * z

    offset = _poly(anchor)
    return lambda z: _poly(z) - offset


def _from_scipy(
    name: str,
    params: Dict[str, float],
    dist,
    support: Support,
    pearson: PearsonParams,
    **extra,
) -> ReferenceLaw:
    """Law whose density/CDF/quantiles come from a scipy frozen distribution."""
    if abs(dist.mean()) > 1e-9 * max(1.0, dist.std()):
        raise InvalidParams(f"{name}: centered distribution has mean {dist.mean()}")
    return ReferenceLaw(
        name=name,
        params=params,
        support=support,
        density=dist.pdf,
        cdf=dist.cdf,
        ppf=dist.ppf,
        gstar=pearson.gstar,
        gstar_prime=pearson.gstar_prime,
        gstar_second=lambda z: np.full(np.shape(z), 2.0 * pearson.alpha),
        pearson=pearson,
        Gstar=_pearson_Gstar(pearson, support.lower if math.isfinite(support.lower) else 0.0),
        dist=dist,
        **extra,
    )


def _normal(sigma: float = 1.0) -> ReferenceLaw:
    if sigma <= 0:
        raise InvalidParams("normal: sigma must be positive")
    return _from_scipy(
        "normal",
        {"sigma": sigma},
        stats.norm(scale=sigma),
        Support(-math.inf, math.inf),
        PearsonParams(0.0, 0.0, sigma ** 2),
    )


def _gamma(s: float = 1.0, r: float = 1.0) -> ReferenceLaw:
    if s <= 0 or r <= 0:
        raise InvalidParams("gamma: scale s and shape r must be positive")
    lower = -r * s
    return _from_scipy(
        "gamma",
        {"s": s, "r": r},
        stats.gamma(a=r, scale=s, loc=lower),
        Support(lower, math.inf),
        PearsonParams(0.0, s, r * s * s),
    )


def _chi2_centered(v: float = 1.0) -> ReferenceLaw:
    if v <= 0:
        raise InvalidParams("chi2_centered: degrees of freedom v must be positive")
    return _from_scipy(
        "chi2_centered",
        {"v": v},
        stats.chi2(df=v, loc=-v),
        Support(-v, math.inf),
        PearsonParams(0.0, 2.0, 2.0 * v),
    )


def _exponential(lam: float = 1.0) -> ReferenceLaw:
    if lam <= 0:
        raise InvalidParams("exponential: rate lam must be positive")
    lower = -1.0 / lam
    return _from_scipy(
        "exponential",
        {"lam": lam},
        stats.expon(scale=1.0 / lam, loc=lower),
        Support(lower, math.inf),
        PearsonParams(0.0, 1.0 / lam, 1.0 / lam ** 2),
    )


def _beta(r: float = 2.0, s: float = 2.0) -> ReferenceLaw:
    if r <= 0 or s <= 0:
        raise InvalidParams("beta: r and s must be positive")
    lower = -r / (r + s)
    k = 1.0 / (r + s)
    # (z−l)(1+l−z)/(r+s) expanded
    return _from_scipy(
        "beta",
        {"r": r, "s": s},
        stats.beta(r, s, loc=lower),
        Support(lower, 1.0 + lower),
        PearsonParams(-k, k * (1.0 + 2.0 * lower), -k * lower * (1.0 + lower)),
    )


def _student_t(v: float = 5.0) -> ReferenceLaw:
    if v <= 2:
        raise InvalidParams("student_t: v must exceed 2 (finite variance)")
    return _from_scipy(
        "student_t",
        {"v": v},
        stats.t(df=v),
        Support(-math.inf, math.inf),
        PearsonParams(1.0 / (v - 1.0), 0.0, v / (v - 1.0)),
    )


def _inverse_gamma(r: float = 5.0, s: float = 1.0) -> ReferenceLaw:
    if r <= 3:
        raise InvalidParams("inverse_gamma: r must exceed 3 (alpha = 1/(r-2) < 1, finite variance)")
    if s <= 0:
        raise InvalidParams("inverse_gamma: s must be positive")
    k = 1.0 / (r - 2.0)
    lower = -s * k
    return _from_scipy(
        "inverse_gamma",
        {"r": r, "s": s},
        stats.invgamma(a=r - 1.0, scale=s, loc=lower),
        Support(lower, math.inf),
        PearsonParams(k, -2.0 * lower * k, lower * lower * k),
    )


def _uniform(u: float = 1.0) -> ReferenceLaw:
    if u <= 0:
        raise InvalidParams("uniform: half-width u must be positive")
    return _from_scipy(
        "uniform",
        {"u": u},
        stats.uniform(loc=-u, scale=2.0 * u),
        Support(-u, u),
        PearsonParams(-0.5, 0.0, u * u / 2.0),
    )


def _pareto(c: float = 3.0, l: float = -1.0) -> ReferenceLaw:
    if c <= 2:
        raise InvalidParams("pareto: c must exceed 2 (finite variance)")
    if l >= 0:
        raise InvalidParams("pareto: lower end l must be negative")
    k = 1.0 / (c - 1.0)
    return _from_scipy(
        "pareto",
        {"c": c, "l": l},
        stats.pareto(b=c, scale=(c - 1.0) * (-l), loc=c * l),
        Support(l, math.inf),
        PearsonParams(k, -(1.0 + c) * l * k, c * l * l * k),
    )


def _pearson4(r: float = 2.0, s: float = 1.0) -> ReferenceLaw:
    """
    Pearson type IV: ρ* ∝ (1+(z−t)²)^(−r) exp(s·arctan(z−t)).

    The location t = −s/(2(r−1)) centers the law; r > 3/2 keeps the
    variance finite. Normalization and CDF are computed by quadrature,
    quantiles by root finding on the CDF.
    """
    if r <= 1.5:
        raise InvalidParams("pearson4: r must exceed 3/2 (finite variance)")
    shift = -s / (2.0 * (r - 1.0))

    def _unnormalized(z):
        x = np.asarray(z, dtype=float) - shift
        return np.exp(-r * np.log1p(x * x) + s * np.arctan(x))

    mass = integrate(lambda z: float(_unnormalized(z)), -math.inf, math.inf, points=[shift], what="pearson4 mass")
    log_norm = -math.log(mass)

    def density(z):
        x = np.asarray(z, dtype=float) - shift
        return np.exp(log_norm - r * np.log1p(x * x) + s * np.arctan(x))

    def _cdf_scalar(z: float) -> float:
        # integrate the thinner side
        if z <= shift:
            return integrate(lambda y: float(density(y)), -math.inf, z, what="pearson4 cdf")
        return 1.0 - integrate(lambda y: float(density(y)), z, math.inf, what="pearson4 sf")

    def cdf(z):
        return np.array([_cdf_scalar(float(zi)) for zi in np.atleast_1d(z)]).reshape(np.shape(z))

    def ppf(q: float) -> float:
        lo, hi = shift - 1.0, shift + 1.0
        while _cdf_scalar(lo) > q:
            lo = shift + 2.0 * (lo - shift)
        while _cdf_scalar(hi) < q:
            hi = shift + 2.0 * (hi - shift)
        return optimize.brentq(lambda z: _cdf_scalar(z) - q, lo, hi, xtol=1e-12)

    alpha = 1.0 / (2.0 * (r - 1.0))
    params = PearsonParams(alpha, -2.0 * shift * alpha, (1.0 + shift * shift) * alpha)
    return ReferenceLaw(
        name="pearson4",
        params={"r": r, "s": s},
        support=Support(-math.inf, math.inf),
        density=density,
        cdf=cdf,
        ppf=ppf,
        gstar=params.gstar,
        gstar_prime=params.gstar_prime,
        gstar_second=lambda z: np.full(np.shape(z), 2.0 * alpha),
        pearson=params,
        Gstar=_pearson_Gstar(params, 0.0),
    )


def _laplace(c: float = 1.0) -> ReferenceLaw:
    """
    Laplace with density (c/2)e^(−c|z|) and g*(z) = (1+c|z|)/c².

    g* has a kink at 0, so the law ships an even quartic bridge g̃ on
    (−1, 1) that matches g* and g*′ at ±1 and equals g* outside.
    """
    if c <= 0:
        raise InvalidParams("laplace: c must be positive")
    dist = stats.laplace(scale=1.0 / c)

    def gstar(z):
        return (1.0 + c * np.abs(z)) / (c * c)

    def gstar_prime(z):
        return np.sign(z) / c

    def Gstar(z):
        return (z + c * z * np.abs(z) / 2.0) / (c * c)

    a0, a2, a4 = 1.0 / (c * c), 3.0 / (2.0 * c), -1.0 / (2.0 * c)

    def smooth(z):
        z = np.asarray(z, dtype=float)
        return np.where(np.abs(z) >= 1.0, gstar(z), a0 + a2 * z ** 2 + a4 * z ** 4)

    def smooth_prime(z):
        z = np.asarray(z, dtype=float)
        return np.where(np.abs(z) >= 1.0, gstar_prime(z), 2.0 * a2 * z + 4.0 * a4 * z ** 3)

    return ReferenceLaw(
        name="laplace",
        params={"c": c},
        support=Support(-math.inf, math.inf),
        density=dist.pdf,
        cdf=dist.cdf,
        ppf=dist.ppf,
        gstar=gstar,
        gstar_prime=gstar_prime,
        gstar_second=lambda z: np.zeros(np.shape(z)),
        Gstar=Gstar,
        smoothing=(smooth, smooth_prime),
        breakpoints=(0.0,),
        dist=dist,
    )


def _lognormal(delta: float = 0.0, sigma: float = 0.5) -> ReferenceLaw:
    """
    Lognormal e^(δ+σN) shifted by l = −e^(δ+σ²/2).

    With p = (ln(z−l) − δ)/σ the kernel is
    g*(z) = σ e^(2δ) √(2π) exp((p+σ)²/2) [Φ(p) − Φ(p−σ)],
    evaluated in log space with the upper-tail form for p > 0.
    """
    if sigma <= 0:
        raise InvalidParams("lognormal: sigma must be positive")
    lower = -math.exp(delta + sigma * sigma / 2.0)
    dist = stats.lognorm(s=sigma, scale=math.exp(delta), loc=lower)
    log_const = math.log(sigma) + 2.0 * delta + 0.5 * math.log(2.0 * math.pi)

    def _p(z):
        return (np.log(z - lower) - delta) / sigma

    def gstar(z):
        p = _p(np.asarray(z, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore"):
            lower_tail = special.log_ndtr(p) + np.log1p(
                -np.exp(special.log_ndtr(p - sigma) - special.log_ndtr(p))
            )
            upper_tail = special.log_ndtr(sigma - p) + np.log1p(
                -np.exp(special.log_ndtr(-p) - special.log_ndtr(sigma - p))
            )
        log_diff = np.where(p > 0, upper_tail, lower_tail)
        return np.exp(log_const + 0.5 * (p + sigma) ** 2 + log_diff)

    def gstar_prime(z):
        # from (g*ρ*)′ = −zρ* and (log ρ*)′ = −(p/σ + 1)/(z − l)
        z = np.asarray(z, dtype=float)
        return -z + gstar(z) * (_p(z) / sigma + 1.0) / (z - lower)

    return ReferenceLaw(
        name="lognormal",
        params={"delta": delta, "sigma": sigma},
        support=Support(lower, math.inf),
        density=dist.pdf,
        cdf=dist.cdf,
        ppf=dist.ppf,
        gstar=gstar,
        gstar_prime=gstar_prime,
        dist=dist,
    )


_BUILDERS: Dict[str, Callable[..., ReferenceLaw]] = {
    "normal": _normal,
    "gamma": _gamma,
    "chi2_centered": _chi2_centered,
    "exponential": _exponential,
    "beta": _beta,
    "pearson4": _pearson4,
    "student_t": _student_t,
    "inverse_gamma": _inverse_gamma,
    "uniform": _uniform,
    "pareto": _pareto,
    "laplace": _laplace,
    "lognormal": _lognormal,
}

LAW_NAMES = tuple(_BUILDERS)


def catalog(name: str, params: Optional[Dict[str, float]] = None) -> ReferenceLaw:
    """
    Build a catalog law.

    Args:
        name: One of LAW_NAMES
        params: Law parameters; omitted ones take their defaults

    Returns:
        ReferenceLaw centered at zero

    Raises:
        UnknownLaw: If name is not in the catalog
        InvalidParams: If a parameter is unknown or violates the law's
            constraints
    """
    if name not in _BUILDERS:
        raise UnknownLaw(f"Unknown law '{name}'. Known laws: {', '.join(LAW_NAMES)}")
    try:
        law = _BUILDERS[name](**{k: float(v) for k, v in (params or {}).items()})
    except TypeError as exc:
        raise InvalidParams(f"{name}: {exc}") from exc
    logger.debug("Built %s", law.law_id)
    return law


def law_to_record(law: ReferenceLaw) -> Dict[str, Any]:
    """Serialize a law as {name, params}."""
    return {"name": law.name, "params": dict(law.params)}


def law_from_record(record: Dict[str, Any]) -> ReferenceLaw:
    """Rebuild a law from law_to_record() output."""
    if "name" not in record:
        raise InvalidParams("law record missing 'name'")
    return catalog(record["name"], record.get("params") or {})


def export_law_csv(law: ReferenceLaw, path: str, n: int = 200) -> str:
    """Write z, rho, Phi, gstar, Gstar on the interior grid."""
    z = law.interior_grid(n)
    rows = zip(z, law.density(z), law.cdf(z), law.gstar(z), law.Gstar(z))
    return write_csv(Path(path), ["z", "rho", "Phi", "gstar", "Gstar"], rows)


def require_in_support(law: ReferenceLaw, z: float) -> None:
    if not law.support.contains(z):
        raise DomainError(f"z={z} outside support ({law.support.lower}, {law.support.upper}) of {law.law_id}")
