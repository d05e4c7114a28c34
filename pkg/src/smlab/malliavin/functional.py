"""
Smooth functionals of a standard Gaussian vector and the Mehler
realization of −DL⁻¹.

For F = φ(ξ) with ξ ~ Normal(0, I_n),

    −DL⁻¹F(ξ) = ∫₀^∞ e^{−t} E′[∇φ(e^{−t}ξ + √(1 − e^{−2t}) ξ′)] dt
              = ∫₀¹ E′[∇φ(uξ + √(1 − u²) ξ′)] du,

so the outer integral is a plain Gauss–Legendre rule on u ∈ (0, 1).
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np
from scipy import linalg

from ..chaos.kernels import ChaosVector
from ..chaos.sampling import derivative_fields, evaluate
from ..errors import GradientUnavailable, InvalidParams, QuadratureFailure
from ..parallel import map_blocks
from ..reports import load_arrays, save_arrays

logger = logging.getLogger(__name__)

MEHLER_NODES = 32
MEHLER_INNER = 64
FD_STEP = 1e-5
GRADIENT_RTOL = 1e-5

STREAM_GAMMA = 31


@dataclass
class SmoothFunctional:
    """
    F = eval(ξ) for ξ ∈ ℝⁿ standard Gaussian, vectorized over rows.

    grad may be omitted; gradient() then falls back to central finite
    differences and numeric_gradient is set. chaos_order marks F as
    living in one Wiener chaos, enabling the ‖∇F‖²/q fast path.
    """

    dim: int
    eval: Callable[[np.ndarray], np.ndarray]
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    chaos_order: Optional[int] = None
    name: str = "F"

    @property
    def numeric_gradient(self) -> bool:
        return self.grad is None

    def __call__(self, xi: np.ndarray) -> np.ndarray:
        return np.asarray(self.eval(np.atleast_2d(xi)), dtype=float)

    def gradient(self, xi: np.ndarray, allow_numeric: bool = True) -> np.ndarray:
        """∇F at each row of xi, shape (paths, dim)."""
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        if self.grad is not None:
            return np.asarray(self.grad(xi), dtype=float)
        if not allow_numeric:
            raise GradientUnavailable(f"{self.name} has no analytic gradient")
        return finite_difference_gradient(self.eval, xi)

    def gradient_check(self, rng: np.random.Generator, points: int = 16, rtol: float = GRADIENT_RTOL) -> bool:
        """Analytic gradient vs central differences at random points."""
        if self.grad is None:
            return True
        xi = rng.standard_normal((points, self.dim))
        analytic = self.gradient(xi)
        numeric = finite_difference_gradient(self.eval, xi)
        scale = np.maximum(np.abs(analytic), 1.0)
        return bool(np.all(np.abs(analytic - numeric) <= rtol * scale))


def finite_difference_gradient(fn: Callable[[np.ndarray], np.ndarray], xi: np.ndarray) -> np.ndarray:
    """Central differences with step FD_STEP·(1 + |ξ_i|)."""
    out = np.empty_like(xi)
    for i in range(xi.shape[1]):
        step = FD_STEP * (1.0 + np.abs(xi[:, i]))
        up, down = xi.copy(), xi.copy()
        up[:, i] += step
        down[:, i] -= step
        out[:, i] = (np.asarray(fn(up)) - np.asarray(fn(down))) / (2.0 * step)
    return out


# -- Example functionals -----------------------------------------------------

def linear(a: Sequence[float]) -> SmoothFunctional:
    """F(ξ) = ⟨a, ξ⟩."""
    a = np.asarray(a, dtype=float)
    return SmoothFunctional(
        dim=len(a),
        eval=lambda xi: xi @ a,
        grad=lambda xi: np.broadcast_to(a, xi.shape).copy(),
        chaos_order=1,
        name="linear",
    )


def hermite_coordinate(degree: int, dim: int = 1, coord: int = 0) -> SmoothFunctional:
    """F(ξ) = He_degree(ξ_coord), a member of chaos `degree`."""
    if degree < 1 or not 0 <= coord < dim:
        raise InvalidParams("hermite_coordinate needs degree >= 1 and 0 <= coord < dim")
    basis = np.zeros(degree + 1)
    basis[degree] = 1.0
    d_basis = np.polynomial.hermite_e.hermeder(basis)

    def _eval(xi):
        return np.polynomial.hermite_e.hermeval(xi[:, coord], basis)

    def _grad(xi):
        g = np.zeros_like(xi)
        g[:, coord] = np.polynomial.hermite_e.hermeval(xi[:, coord], d_basis)
        return g

    return SmoothFunctional(dim=dim, eval=_eval, grad=_grad, chaos_order=degree, name=f"He{degree}")


def random_cubic(rng: np.random.Generator, dim: int = 3, scale: float = 0.5) -> SmoothFunctional:
    """
    Centered polynomial mixing chaoses 1 to 3:
    Σ a_i ξ_i + Σ_{i<j} b_ij ξ_i ξ_j + Σ c_i He₃(ξ_i).
    """
    a = rng.normal(0.0, scale, dim)
    b = np.triu(rng.normal(0.0, scale, (dim, dim)), k=1)
    c = rng.normal(0.0, scale / 2.0, dim)

    def _eval(xi):
        quad = np.einsum("pi,ij,pj->p", xi, b, xi)
        return xi @ a + quad + (xi ** 3 - 3.0 * xi) @ c

    def _grad(xi):
        return a + xi @ (b + b.T) + (3.0 * xi ** 2 - 3.0) * c

    return SmoothFunctional(dim=dim, eval=_eval, grad=_grad, name="random_cubic")


def absolute_value(dim: int = 1, coord: int = 0) -> SmoothFunctional:
    """F(ξ) = |ξ_coord| − √(2/π); a.e. differentiable, gradient 0 at the kink."""
    offset = math.sqrt(2.0 / math.pi)

    def _grad(xi):
        g = np.zeros_like(xi)
        g[:, coord] = np.sign(xi[:, coord])
        return g

    return SmoothFunctional(dim=dim, eval=lambda xi: np.abs(xi[:, coord]) - offset, grad=_grad, name="abs")


def from_chaos(F: ChaosVector) -> SmoothFunctional:
    """
    View a chaos expansion as a function of the standardized cell noise
    η = ξ/√μ. ∂F/∂η_c = √μ_c·D_cF.
    """
    fields = derivative_fields(F)
    sqrt_mu = np.sqrt(F.grid.mu)
    n = F.grid.dimension

    def _grad(eta):
        return np.column_stack([evaluate(fields[c], eta) for c in range(n)]) * sqrt_mu

    return SmoothFunctional(
        dim=n,
        eval=lambda eta: evaluate(F, eta),
        grad=_grad,
        chaos_order=F.single_order(),
        name="chaos",
    )


# -- −DL⁻¹ ---------------------------------------------------------------------

def _inner_draws(rng: np.random.Generator, dim: int, inner: int) -> np.ndarray:
    """
    Antithetic pairs ±Z whitened so the empirical second moment is I
    (per-coordinate rescaling when there are fewer draws than dimensions).
    """
    half = inner // 2
    z = rng.standard_normal((half, dim))
    if half > dim:
        cov = z.T @ z / half
        chol = linalg.cholesky(cov, lower=True)
        z = linalg.solve_triangular(chol, z.T, lower=True).T
    else:
        z /= np.sqrt(np.mean(z ** 2, axis=0))
    return np.concatenate([z, -z], axis=0)


def minus_DL_inv(
    F: SmoothFunctional,
    xi: np.ndarray,
    rng: np.random.Generator,
    nodes: int = MEHLER_NODES,
    inner: int = MEHLER_INNER,
    allow_numeric: bool = True,
) -> np.ndarray:
    """
    −DL⁻¹F at each row of xi.

    Gauss–Legendre with `nodes` points on u ∈ (0, 1); the Gaussian
    average uses `inner` antithetic, moment-matched draws shared by all
    rows of the block.

    Raises:
        GradientUnavailable: If F has no gradient and allow_numeric is False
        QuadratureFailure: If the result is not finite
    """
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    paths, dim = xi.shape
    if dim != F.dim:
        raise InvalidParams(f"{F.name} expects dimension {F.dim}, got {dim}")
    if F.grad is None and not allow_numeric:
        raise GradientUnavailable(f"{F.name} has no analytic gradient")
    if F.grad is None:
        logger.warning("%s: using finite-difference gradient inside the Mehler integral", F.name)

    x_nodes, w_nodes = np.polynomial.legendre.leggauss(nodes)
    u_nodes = 0.5 * (x_nodes + 1.0)
    w_nodes = 0.5 * w_nodes
    z = _inner_draws(rng, dim, inner)

    out = np.zeros((paths, dim))
    for u, w in zip(u_nodes, w_nodes):
        arg = u * xi[:, None, :] + math.sqrt(1.0 - u * u) * z[None, :, :]
        grad = F.gradient(arg.reshape(-1, dim)).reshape(paths, len(z), dim)
        out += w * grad.mean(axis=1)
    if not np.all(np.isfinite(out)):
        raise QuadratureFailure(f"Mehler integral for {F.name} is not finite")
    return out


# -- Gamma samples -------------------------------------------------------------

@dataclass
class GammaSamples:
    """Paired draws of X = F(ξ) and Y = ⟨DF, −DL⁻¹F⟩."""

    x: np.ndarray
    y: np.ndarray
    meta: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.x)

    def mean_identity(self) -> Dict[str, float]:
        """Ê[Y] − Ê[X²] with its paired standard error; zero in expectation."""
        diff = self.y - self.x ** 2
        n = len(diff)
        return {
            "mean_y": float(np.mean(self.y)),
            "mean_x2": float(np.mean(self.x ** 2)),
            "diff": float(np.mean(diff)),
            "diff_se": float(np.std(diff, ddof=1) / math.sqrt(n)),
        }

    def save(self, out_dir: str, name: str = "gamma") -> str:
        return save_arrays(Path(out_dir), name, {"x": self.x, "y": self.y}, self.meta)

    @classmethod
    def load(cls, manifest_path: str) -> "GammaSamples":
        arrays = load_arrays(Path(manifest_path))
        with open(manifest_path, "r", encoding="utf-8") as f:
            meta = {k: v for k, v in json.load(f).items() if k not in ("files", "name")}
        return cls(x=arrays["x"], y=arrays["y"], meta=meta)


DEFAULT_GAMMA_SPEC = {"nodes": MEHLER_NODES, "inner": MEHLER_INNER, "threads": 1, "fast_path": True}


def gamma_draw(
    F: SmoothFunctional,
    n_paths: int,
    seed: int,
    spec: Optional[Dict[str, Any]] = None,
    key: Sequence[int] = (STREAM_GAMMA,),
) -> GammaSamples:
    """
    Sample (X, Y) along n_paths.

    When F declares a chaos order q and the fast path is enabled,
    Y = ‖∇F‖²/q; otherwise Y = ⟨∇F, −DL⁻¹F⟩ through the Mehler integral.
    """
    spec = {**DEFAULT_GAMMA_SPEC, **(spec or {})}
    fast = bool(spec["fast_path"]) and F.chaos_order is not None and F.chaos_order > 0

    def _block(rng: np.random.Generator, size: int, block: int) -> Dict[str, np.ndarray]:
        xi = rng.standard_normal((size, F.dim))
        x = F(xi)
        grad = F.gradient(xi)
        if fast:
            y = np.sum(grad ** 2, axis=1) / F.chaos_order
        else:
            y = np.sum(grad * minus_DL_inv(F, xi, rng, int(spec["nodes"]), int(spec["inner"])), axis=1)
        return {"x": x, "y": y}

    draws = map_blocks(_block, n_paths, seed, key=key, threads=int(spec["threads"]))
    meta = {
        "n_paths": n_paths,
        "seed": seed,
        "functional": F.name,
        "fast_path": fast,
        "quadrature": {"nodes": int(spec["nodes"]), "inner": int(spec["inner"])},
        "numeric_gradient": F.numeric_gradient,
    }
    logger.info("gamma_draw %s: %d paths (fast_path=%s)", F.name, n_paths, fast)
    return GammaSamples(x=draws["x"], y=draws["y"], meta=meta)
